#pragma once

// Maps truncated HARQ schemes onto renewal interarrival pmfs and reward
// tables, with closed-form outage where it exists (Type I over arbitrary
// Nakagami-m, chase combining over i.i.d. Nakagami-m) and the per-scheme
// normalized effective capacities, LTAT formulas, and bounds.
//
// Unit conventions: rates are in bits/symbol; a "round" carries one
// subcodeword. Capacities are reported in bits/symbol against the scheme's
// normalized QoS exponent (theta scaled by the subcodeword length for
// fixed-rate and cross-packet schemes, by the packet size for variable-rate).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "effcap/renewal.hpp"
#include "effcap/reward.hpp"
#include "effcap/special.hpp"

namespace effcap {

enum class HarqScheme { TypeI, Cc, Ir, Vr, Xp };

inline bool is_fixed_rate(HarqScheme s) noexcept {
    return s == HarqScheme::TypeI || s == HarqScheme::Cc || s == HarqScheme::Ir;
}

inline const char* scheme_name(HarqScheme s) noexcept {
    switch (s) {
        case HarqScheme::TypeI: return "type1";
        case HarqScheme::Cc: return "cc";
        case HarqScheme::Ir: return "ir";
        case HarqScheme::Vr: return "vr";
        case HarqScheme::Xp: return "xp";
    }
    return "?";
}

inline std::optional<HarqScheme> parse_scheme(std::string_view name) noexcept {
    if (name == "type1" || name == "typeI" || name == "type-i") return HarqScheme::TypeI;
    if (name == "cc") return HarqScheme::Cc;
    if (name == "ir") return HarqScheme::Ir;
    if (name == "vr") return HarqScheme::Vr;
    if (name == "xp") return HarqScheme::Xp;
    return std::nullopt;
}

struct NakagamiParam {
    double m = 1.0;     // fading order, >= 0.5
    double omega = 1.0; // average channel power gain, > 0
};

struct HarqConfig {
    HarqScheme scheme = HarqScheme::Cc;
    int max_rounds = 5;
    std::vector<double> rates = {4.0}; // length 1 for fixed-rate, max_rounds for vr/xp
    double snr_db = 20.0;
    std::vector<NakagamiParam> fading; // per round; empty = Rayleigh everywhere
    double packet_bits = 1080.0;       // b
    double symbols_per_block = 0.0;    // L; 0 derives b / rates[0]

    double snr_linear() const noexcept { return std::pow(10.0, snr_db / 10.0); }

    double rate_for_round(int round) const { // 1-based round index
        return is_fixed_rate(scheme) ? rates.at(0)
                                     : rates.at(static_cast<std::size_t>(round - 1));
    }

    NakagamiParam fading_for_round(int round) const {
        if (fading.empty()) return NakagamiParam{};
        return fading.at(static_cast<std::size_t>(round - 1));
    }

    bool iid_fading() const noexcept {
        if (fading.empty()) return true;
        for (const auto& f : fading)
            if (f.m != fading[0].m || f.omega != fading[0].omega) return false;
        return true;
    }

    void validate() const {
        if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
        const std::size_t want = is_fixed_rate(scheme) ? 1u
                                                       : static_cast<std::size_t>(max_rounds);
        if (rates.size() != want)
            throw std::invalid_argument("rates must have length " + std::to_string(want) +
                                        " for scheme " + scheme_name(scheme));
        for (std::size_t i = 0; i < rates.size(); ++i) {
            const bool zero_ok = scheme == HarqScheme::Xp && i > 0;
            if (!(rates[i] > 0.0) && !(zero_ok && rates[i] == 0.0))
                throw std::invalid_argument("rates must be > 0 (xp rounds 2.. may be 0)");
        }
        if (!fading.empty() && fading.size() != static_cast<std::size_t>(max_rounds))
            throw std::invalid_argument("fading must have one (m, omega) per round");
        for (const auto& f : fading) {
            if (!(f.m >= 0.5)) throw std::invalid_argument("fading order m must be >= 0.5");
            if (!(f.omega > 0.0)) throw std::invalid_argument("omega must be > 0");
        }
        if (!(packet_bits > 0.0)) throw std::invalid_argument("packet_bits must be > 0");
    }

    static HarqConfig defaults(HarqScheme s) {
        HarqConfig c;
        c.scheme = s;
        c.max_rounds = 5;
        c.snr_db = 20.0;
        c.packet_bits = 1080.0;
        c.rates = is_fixed_rate(s) ? std::vector<double>{4.0}
                                   : std::vector<double>(5, 4.0);
        if (s == HarqScheme::Xp) {
            // Fixed-rate equivalent point: all new bits in the first round.
            c.rates.assign(5, 0.0);
            c.rates[0] = 4.0;
        }
        return c;
    }
};

/// Outage probabilities p_0..p_K with p_0 = 1; stderr is zero for closed
/// forms and the binomial standard error for Monte Carlo estimates.
struct OutageCurve {
    std::vector<double> p;
    std::vector<double> stderr_p;

    int max_rounds() const noexcept { return static_cast<int>(p.size()) - 1; }

    void validate() const {
        if (p.size() < 2) throw std::invalid_argument("outage curve needs p0 and p1");
        if (p[0] != 1.0) throw std::invalid_argument("outage curve must start at p0 = 1");
        for (std::size_t k = 1; k < p.size(); ++k)
            if (p[k] > p[k - 1] + 1e-12 || p[k] < 0.0)
                throw std::invalid_argument("outage curve must be non-increasing in [0, 1]");
        if (!stderr_p.empty() && stderr_p.size() != p.size())
            throw std::invalid_argument("stderr vector must match the curve length");
    }
};

/// Closed-form outage after `rounds` HARQ rounds. Type I works for arbitrary
/// per-round Nakagami-m parameters (independent per-round thresholds);
/// chase combining needs i.i.d. rounds (the SNR sum stays gamma). Everything
/// else routes to Monte Carlo.
inline double outage_closed_form(const HarqConfig& config, int rounds) {
    config.validate();
    if (rounds < 0 || rounds > config.max_rounds)
        throw std::invalid_argument("rounds out of range");
    if (rounds == 0) return 1.0;
    const double threshold = std::pow(2.0, config.rates.at(0)) - 1.0;
    const double snr = config.snr_linear();
    switch (config.scheme) {
        case HarqScheme::TypeI: {
            double p = 1.0;
            for (int l = 1; l <= rounds; ++l) {
                const auto f = config.fading_for_round(l);
                p *= gamma_p(f.m, f.m * threshold / (snr * f.omega));
            }
            return p;
        }
        case HarqScheme::Cc: {
            if (!config.iid_fading())
                throw NeedsMonteCarlo("chase combining closed form needs i.i.d. rounds");
            const auto f = config.fading_for_round(1);
            return gamma_p(rounds * f.m, f.m * threshold / (snr * f.omega));
        }
        default:
            throw NeedsMonteCarlo(std::string("no closed-form outage for scheme ") +
                                  scheme_name(config.scheme));
    }
}

inline OutageCurve closed_form_outage_curve(const HarqConfig& config) {
    OutageCurve curve;
    curve.p.resize(static_cast<std::size_t>(config.max_rounds) + 1);
    curve.stderr_p.assign(curve.p.size(), 0.0);
    for (int k = 0; k <= config.max_rounds; ++k)
        curve.p[static_cast<std::size_t>(k)] = outage_closed_form(config, k);
    curve.validate();
    return curve;
}

/// q_k = p_{k-1} - p_k for k < K, q_K = p_{K-1} (round-K failures are
/// absorbed into the renewal). Sums to 1 by telescoping.
inline InterarrivalPmf interarrival_pmf_from_outage(const OutageCurve& curve) {
    curve.validate();
    const int k_max = curve.max_rounds();
    std::vector<double> probs(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (int k = 1; k <= k_max; ++k) {
        probs[static_cast<std::size_t>(k)] =
            (k == k_max) ? curve.p[static_cast<std::size_t>(k - 1)]
                         : curve.p[static_cast<std::size_t>(k - 1)] -
                               curve.p[static_cast<std::size_t>(k)];
    }
    return InterarrivalPmf(std::move(probs));
}

namespace detail {

/// Best rational p/q approximation of x with q <= max_den, by continued
/// fractions. Returns nullopt when no convergent lands within tol.
inline std::optional<std::pair<std::int64_t, std::int64_t>>
rationalize(double x, std::int64_t max_den, double tol) {
    if (!(x >= 0.0) || !std::isfinite(x)) return std::nullopt;
    std::int64_t p_prev = 1, q_prev = 0;
    std::int64_t p = static_cast<std::int64_t>(std::floor(x)), q = 1;
    double frac = x - std::floor(x);
    for (int iter = 0; iter < 64; ++iter) {
        if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) <= tol)
            return std::make_pair(p, q);
        if (frac == 0.0) break;
        const double inv = 1.0 / frac;
        const double a_floor = std::floor(inv);
        if (a_floor > static_cast<double>(max_den)) break; // q_next would overshoot
        const std::int64_t a = static_cast<std::int64_t>(a_floor);
        frac = inv - a_floor;
        const std::int64_t p_next = a * p + p_prev;
        const std::int64_t q_next = a * q + q_prev;
        if (q_next > max_den) break;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
    if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) <= tol)
        return std::make_pair(p, q);
    return std::nullopt;
}

/// Cumulative interarrival values per round, in the scheme's normalized time
/// unit: rounds for fixed-rate and xp, sum of 1/rate for vr.
inline std::vector<double> interarrival_values(std::span<const double> rates,
                                               HarqScheme scheme, int max_rounds) {
    std::vector<double> x(static_cast<std::size_t>(max_rounds));
    if (scheme == HarqScheme::Vr) {
        double acc = 0.0;
        for (int k = 1; k <= max_rounds; ++k) {
            acc += 1.0 / rates[static_cast<std::size_t>(k - 1)];
            x[static_cast<std::size_t>(k - 1)] = acc;
        }
    } else {
        for (int k = 1; k <= max_rounds; ++k) x[static_cast<std::size_t>(k - 1)] = k;
    }
    return x;
}

} // namespace detail

/// Integer lattice ticks per normalized time unit for a scheme's interarrival
/// values: 1 for fixed-rate/xp (round lattice), the common denominator of the
/// cumulative 1/rate sums for vr. Exact rationalization is attempted first;
/// otherwise values must sit on a 1/1024 lattice within 1e-9 or LatticeError
/// is thrown.
inline double lattice_ticks_per_unit(std::span<const double> rates, HarqScheme scheme) {
    if (scheme != HarqScheme::Vr) return 1.0;
    const auto x = detail::interarrival_values(rates, scheme,
                                               static_cast<int>(rates.size()));
    std::int64_t lcm_den = 1;
    bool exact = true;
    for (double v : x) {
        const auto pq = detail::rationalize(v, 4096, 1e-12 * std::max(1.0, v));
        if (!pq) {
            exact = false;
            break;
        }
        lcm_den = std::lcm(lcm_den, pq->second);
        if (lcm_den > 1'000'000) {
            exact = false;
            break;
        }
    }
    if (exact) return static_cast<double>(lcm_den);
    for (double v : x) {
        const double scaled = v * 1024.0;
        if (std::abs(scaled - std::round(scaled)) > 1e-9 * 1024.0)
            throw LatticeError("interarrival values do not sit on a common lattice");
    }
    return 1024.0;
}

struct LatticeTable {
    RewardTable table;     // interarrival in integer lattice ticks
    double ticks_per_unit; // multiplier back to the normalized time unit
};

/// Builds the scheme's outage reward table on its integer lattice.
/// Fixed-rate: success states pay the transmission rate, the round-K failure
/// state pays zero. Vr: interarrival sum_l 1/rate_l (lattice-scaled), reward
/// 1 per success. Xp: interarrival in rounds, reward sum_l rate_l on success.
inline LatticeTable reward_table_outage_scaled(const OutageCurve& curve,
                                               std::span<const double> rates,
                                               HarqScheme scheme) {
    curve.validate();
    const int k_max = curve.max_rounds();
    if (!is_fixed_rate(scheme) && static_cast<int>(rates.size()) != k_max)
        throw std::invalid_argument("rates must cover every round");
    if (is_fixed_rate(scheme) && rates.size() != 1)
        throw std::invalid_argument("fixed-rate schemes take a single rate");

    const auto x = detail::interarrival_values(rates, scheme, k_max);
    const double ticks = lattice_ticks_per_unit(rates, scheme);

    std::vector<int> lattice_k(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        const double scaled = x[static_cast<std::size_t>(k - 1)] * ticks;
        const std::int64_t n = std::llround(scaled);
        if (std::abs(scaled - static_cast<double>(n)) > 1e-6 || n < 1)
            throw LatticeError("interarrival value off the integer lattice");
        lattice_k[static_cast<std::size_t>(k - 1)] = static_cast<int>(n);
        if (k > 1 && lattice_k[static_cast<std::size_t>(k - 1)] <=
                         lattice_k[static_cast<std::size_t>(k - 2)])
            throw LatticeError("lattice too coarse: interarrival values collide");
    }

    auto reward_at = [&](int k) -> double {
        switch (scheme) {
            case HarqScheme::Vr: return 1.0;
            case HarqScheme::Xp: {
                double sum = 0.0;
                for (int l = 1; l <= k; ++l) sum += rates[static_cast<std::size_t>(l - 1)];
                return sum;
            }
            default: return rates[0];
        }
    };

    std::vector<RewardEntry> entries;
    for (int k = 1; k <= k_max; ++k) {
        const double q_success = curve.p[static_cast<std::size_t>(k - 1)] -
                                 curve.p[static_cast<std::size_t>(k)];
        if (q_success > 0.0)
            entries.push_back({lattice_k[static_cast<std::size_t>(k - 1)],
                               "S" + std::to_string(k), q_success, reward_at(k)});
    }
    const double q_fail = curve.p[static_cast<std::size_t>(k_max)];
    if (q_fail > 0.0)
        entries.push_back({lattice_k[static_cast<std::size_t>(k_max - 1)], "F", q_fail, 0.0});
    return {RewardTable(std::move(entries)), ticks};
}

inline RewardTable reward_table_outage(const OutageCurve& curve,
                                       std::span<const double> rates, HarqScheme scheme) {
    return reward_table_outage_scaled(curve, rates, scheme).table;
}

/// Rescales rate-like fields of a lattice-domain result back to the
/// normalized time unit (capacity etc. are per-tick quantities, so they all
/// scale by ticks_per_unit; so does ln zeta).
inline EcResult rescale_to_unit(EcResult r, double ticks_per_unit) {
    if (ticks_per_unit == 1.0) return r;
    r.log_zeta *= ticks_per_unit;
    r.zeta = std::exp(r.log_zeta);
    r.capacity *= ticks_per_unit;
    r.lower_bound *= ticks_per_unit;
    r.upper_bound *= ticks_per_unit;
    r.approx_small_theta *= ticks_per_unit;
    r.ltat *= ticks_per_unit;
    return r;
}

/// Maximum supportable arrival rate: every HARQ cycle pays the full rate
/// whether decoding succeeded or not, so the process has a constant reward on
/// the round lattice. theta is the round-normalized exponent.
inline EcResult ec_max_arrival(const InterarrivalPmf& pmf, double rate, double theta,
                               const RootOptions& opt = {}) {
    return effective_capacity_constant(pmf, rate, theta, opt);
}

inline EcResult ec_max_arrival(const HarqConfig& config, double theta,
                               const RootOptions& opt = {}) {
    if (!is_fixed_rate(config.scheme))
        throw std::invalid_argument("max-arrival capacity is defined for fixed-rate schemes");
    const auto curve = closed_form_outage_curve(config); // throws NeedsMonteCarlo for ir
    return ec_max_arrival(interarrival_pmf_from_outage(curve), config.rates[0], theta, opt);
}

/// Outage effective capacity from a (closed-form or estimated) outage curve;
/// failures pay nothing. theta is the scheme's normalized exponent.
inline EcResult ec_outage_from_curve(const OutageCurve& curve,
                                     std::span<const double> rates, HarqScheme scheme,
                                     double theta, const RootOptions& opt = {}) {
    const auto lattice = reward_table_outage_scaled(curve, rates, scheme);
    return rescale_to_unit(effective_capacity_variable(lattice.table, theta, opt),
                           lattice.ticks_per_unit);
}

inline EcResult ec_outage(const HarqConfig& config, double theta,
                          const RootOptions& opt = {}) {
    const auto curve = closed_form_outage_curve(config); // throws NeedsMonteCarlo
    return ec_outage_from_curve(curve, config.rates, config.scheme, theta, opt);
}

/// Scheme-matched LTAT formulas (equal to ltat() of the generated table):
/// fixed-rate R(1-p_K)/sum p_k, vr (1-p_K)/sum p_k/rate_{k+1},
/// xp sum_k rate_k (p_{k-1} - p_K) / sum p_k.
inline double ltat_harq(const OutageCurve& curve, std::span<const double> rates,
                        HarqScheme scheme) {
    curve.validate();
    const int k_max = curve.max_rounds();
    double denom = 0.0;
    switch (scheme) {
        case HarqScheme::Vr:
            for (int k = 0; k < k_max; ++k)
                denom += curve.p[static_cast<std::size_t>(k)] /
                         rates[static_cast<std::size_t>(k)];
            return (1.0 - curve.p[static_cast<std::size_t>(k_max)]) / denom;
        case HarqScheme::Xp: {
            double numer = 0.0;
            for (int k = 1; k <= k_max; ++k)
                numer += rates[static_cast<std::size_t>(k - 1)] *
                         (curve.p[static_cast<std::size_t>(k - 1)] -
                          curve.p[static_cast<std::size_t>(k_max)]);
            for (int k = 0; k < k_max; ++k) denom += curve.p[static_cast<std::size_t>(k)];
            return numer / denom;
        }
        default:
            for (int k = 0; k < k_max; ++k) denom += curve.p[static_cast<std::size_t>(k)];
            return rates[0] * (1.0 - curve.p[static_cast<std::size_t>(k_max)]) / denom;
    }
}

/// Residual of the scheme's normalized root equation evaluated at ln(zeta) in
/// the normalized unit; near zero when the solved root is plugged back in.
inline double normalized_equation_residual(const OutageCurve& curve,
                                           std::span<const double> rates,
                                           HarqScheme scheme, double theta,
                                           double log_zeta_unit) {
    const int k_max = curve.max_rounds();
    const auto x = detail::interarrival_values(rates, scheme, k_max);
    auto reward_at = [&](int k) -> double {
        if (scheme == HarqScheme::Vr) return 1.0;
        if (scheme == HarqScheme::Xp) {
            double sum = 0.0;
            for (int l = 1; l <= k; ++l) sum += rates[static_cast<std::size_t>(l - 1)];
            return sum;
        }
        return rates[0];
    };
    detail::LogSumExp acc;
    for (int k = 1; k <= k_max; ++k) {
        const double q = curve.p[static_cast<std::size_t>(k - 1)] -
                         curve.p[static_cast<std::size_t>(k)];
        if (q > 0.0)
            acc.add(std::log(q) - theta * reward_at(k) +
                    x[static_cast<std::size_t>(k - 1)] * log_zeta_unit);
    }
    const double q_fail = curve.p[static_cast<std::size_t>(k_max)];
    if (q_fail > 0.0)
        acc.add(std::log(q_fail) + x[static_cast<std::size_t>(k_max - 1)] * log_zeta_unit);
    return std::abs(acc.value());
}

} // namespace effcap
