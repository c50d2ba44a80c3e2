#pragma once

// Seeded Monte Carlo engine. Every episode's (or sample path's) draws come
// from a counter-based generator keyed by (seed, index), so results are a
// pure function of the inputs and do not depend on how index ranges are
// split across workers. Reductions are integer counts or fixed-tree pairwise
// sums for the same reason.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "effcap/detail/math.hpp"
#include "effcap/harq.hpp"
#include "effcap/reward.hpp"

namespace effcap {

namespace detail {

struct Philox2x64State {
    std::uint64_t c0;
    std::uint64_t c1;
};

/// One Philox2x64-10 block: bijective mix of the 128-bit counter under the
/// 64-bit key.
inline Philox2x64State philox2x64(Philox2x64State ctr, std::uint64_t key) noexcept {
    constexpr std::uint64_t mult = 0xD2B74407B1CE6E93ull;
    constexpr std::uint64_t bump = 0x9E3779B97F4A7C15ull;
    for (int round = 0; round < 10; ++round) {
        const unsigned __int128 product = static_cast<unsigned __int128>(ctr.c0) * mult;
        const std::uint64_t lo = static_cast<std::uint64_t>(product);
        const std::uint64_t hi = static_cast<std::uint64_t>(product >> 64);
        ctr = {hi ^ key ^ ctr.c1, lo};
        key += bump;
    }
    return ctr;
}

} // namespace detail

/// Counter-based stream: all output is a pure function of (seed, stream).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(seed), stream_(stream) {}

    std::uint64_t next_u64() noexcept {
        if (buffered_ == 0) {
            const auto block = detail::philox2x64({stream_, counter_++}, key_);
            buffer_ = {block.c0, block.c1};
            buffered_ = 2;
        }
        return buffer_[--buffered_];
    }

    /// Uniform on the open interval (0, 1).
    double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() noexcept {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Gamma(shape, 1). shape = 1 uses the inverse-cdf exponential; shape > 1
    /// uses Marsaglia-Tsang; shape in [0.5, 1) boosts through shape + 1.
    double next_gamma(double shape) {
        if (!(shape >= 0.5)) throw std::invalid_argument("gamma shape must be >= 0.5");
        if (shape == 1.0) return -std::log(next_unit());
        if (shape < 1.0) {
            const double g = next_gamma(shape + 1.0);
            return g * std::pow(next_unit(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = next_normal();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

struct McEstimate {
    double mean = 0.0;
    double stderr_value = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    bool variance_warning = false; // stderr/mean > 0.1: estimator degenerating
};

namespace detail {

inline int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Contiguous index ranges for the requested worker count.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> index_ranges(std::uint64_t n,
                                                                         int workers) {
    const int w = std::max(1, (n < 4096) ? 1 : resolve_workers(workers));
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
    const std::uint64_t chunk =
        (n + static_cast<std::uint64_t>(w) - 1) / static_cast<std::uint64_t>(w);
    for (int i = 0; i < w; ++i) {
        const std::uint64_t begin = static_cast<std::uint64_t>(i) * chunk;
        const std::uint64_t end = std::min(n, begin + chunk);
        if (begin < end) ranges.emplace_back(begin, end);
    }
    return ranges;
}

/// Runs fn(begin, end) over contiguous index chunks, possibly in parallel.
/// Callers must write to disjoint slots or accumulate into per-chunk state.
template <class Fn>
void parallel_chunks(std::uint64_t n, int workers, Fn&& fn) {
    const auto ranges = index_ranges(n, workers);
    if (ranges.size() == 1) {
        fn(ranges[0].first, ranges[0].second);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(ranges.size());
    for (const auto& [begin, end] : ranges)
        threads.emplace_back([&fn, begin = begin, end = end] { fn(begin, end); });
    for (auto& t : threads) t.join();
}

} // namespace detail

struct Episode {
    int rounds_used = 0;
    bool success = false;
    std::vector<double> accumulated_info; // per-round decision statistic
};

/// Plays one HARQ episode. All max_rounds channel gains are drawn up front
/// (even past success) so the per-episode draw count is fixed and the
/// decoding rule only interprets them; schemes sharing a stream therefore see
/// identical fades. Success is the first round whose decision statistic
/// clears the scheme's threshold, else failure at max_rounds.
inline Episode sample_episode(const HarqConfig& config, CounterRng& rng) {
    const int k_max = config.max_rounds;
    std::vector<double> snr(static_cast<std::size_t>(k_max));
    const double snr_t = config.snr_linear();
    for (int l = 1; l <= k_max; ++l) {
        const auto f = config.fading_for_round(l);
        snr[static_cast<std::size_t>(l - 1)] = snr_t * (f.omega / f.m) * rng.next_gamma(f.m);
    }

    Episode ep;
    ep.accumulated_info.resize(static_cast<std::size_t>(k_max));
    double running = 0.0; // scheme-specific accumulator
    double xp_target = 0.0;
    int success_round = 0;
    for (int k = 1; k <= k_max; ++k) {
        const double g = snr[static_cast<std::size_t>(k - 1)];
        double stat = 0.0;
        bool decoded = false;
        switch (config.scheme) {
            case HarqScheme::TypeI:
                running = std::max(running, g);
                stat = std::log2(1.0 + running);
                decoded = stat > config.rates[0];
                break;
            case HarqScheme::Cc:
                running += g;
                stat = std::log2(1.0 + running);
                decoded = stat > config.rates[0];
                break;
            case HarqScheme::Ir:
                running += std::log2(1.0 + g);
                stat = running;
                decoded = stat > config.rates[0];
                break;
            case HarqScheme::Vr:
                running += std::log2(1.0 + g) / config.rates[static_cast<std::size_t>(k - 1)];
                stat = running;
                decoded = stat >= 1.0;
                break;
            case HarqScheme::Xp:
                running += std::log2(1.0 + g);
                xp_target += config.rates[static_cast<std::size_t>(k - 1)];
                stat = running;
                decoded = stat >= xp_target;
                break;
        }
        ep.accumulated_info[static_cast<std::size_t>(k - 1)] = stat;
        if (decoded && success_round == 0) success_round = k;
    }
    ep.success = success_round != 0;
    ep.rounds_used = ep.success ? success_round : k_max;
    return ep;
}

namespace detail {

struct EpisodeCounts {
    std::vector<std::uint64_t> success; // success at round k stored at [k-1]
    std::uint64_t failure = 0;

    explicit EpisodeCounts(int k_max = 0)
        : success(static_cast<std::size_t>(k_max), 0) {}

    void merge(const EpisodeCounts& other) {
        for (std::size_t k = 0; k < success.size(); ++k) success[k] += other.success[k];
        failure += other.failure;
    }
    std::uint64_t total() const {
        std::uint64_t t = failure;
        for (auto s : success) t += s;
        return t;
    }
};

/// Counts episode outcomes; optionally also per jackknife block (block of
/// episode i is i * n_blocks / n). All accumulation is integer, so the result
/// is identical for any worker count.
inline EpisodeCounts count_episodes(const HarqConfig& config, std::uint64_t n,
                                    std::uint64_t seed, int workers,
                                    std::vector<EpisodeCounts>* blocks = nullptr,
                                    int n_blocks = 0) {
    const int k_max = config.max_rounds;
    const auto ranges = index_ranges(n, workers);
    std::vector<EpisodeCounts> partial(ranges.size(), EpisodeCounts(k_max));
    std::vector<std::vector<EpisodeCounts>> block_partial;
    if (blocks)
        block_partial.assign(ranges.size(),
                             std::vector<EpisodeCounts>(
                                 static_cast<std::size_t>(n_blocks), EpisodeCounts(k_max)));

    auto body = [&](std::size_t slot) {
        auto& local = partial[slot];
        for (std::uint64_t i = ranges[slot].first; i < ranges[slot].second; ++i) {
            CounterRng rng(seed, i);
            const Episode ep = sample_episode(config, rng);
            auto bump = [&](EpisodeCounts& c) {
                if (ep.success)
                    ++c.success[static_cast<std::size_t>(ep.rounds_used - 1)];
                else
                    ++c.failure;
            };
            bump(local);
            if (blocks) {
                const std::size_t bi = static_cast<std::size_t>(
                    i * static_cast<std::uint64_t>(n_blocks) / n);
                bump(block_partial[slot][bi]);
            }
        }
    };

    if (ranges.size() == 1) {
        body(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(ranges.size());
        for (std::size_t r = 0; r < ranges.size(); ++r)
            threads.emplace_back([&body, r] { body(r); });
        for (auto& t : threads) t.join();
    }

    EpisodeCounts total(k_max);
    for (const auto& p : partial) total.merge(p);
    if (blocks) {
        blocks->assign(static_cast<std::size_t>(n_blocks), EpisodeCounts(k_max));
        for (const auto& bp : block_partial)
            for (std::size_t b = 0; b < bp.size(); ++b) (*blocks)[b].merge(bp[b]);
    }
    return total;
}

inline OutageCurve curve_from_counts(const EpisodeCounts& counts, std::uint64_t n) {
    const int k_max = static_cast<int>(counts.success.size());
    OutageCurve curve;
    curve.p.resize(static_cast<std::size_t>(k_max) + 1);
    curve.stderr_p.resize(curve.p.size());
    curve.p[0] = 1.0;
    curve.stderr_p[0] = 0.0;
    std::uint64_t decoded = 0;
    for (int k = 1; k <= k_max; ++k) {
        decoded += counts.success[static_cast<std::size_t>(k - 1)];
        const double p = static_cast<double>(n - decoded) / static_cast<double>(n);
        curve.p[static_cast<std::size_t>(k)] = p;
        curve.stderr_p[static_cast<std::size_t>(k)] =
            std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    }
    return curve;
}

} // namespace detail

struct HarqTableEstimate {
    OutageCurve curve;                       // implied curve, monotone by construction
    LatticeTable lattice;                    // reward table built from the curve
    std::vector<double> entry_stderr;        // binomial stderr per table entry
    std::vector<std::uint64_t> success_counts; // success at round 1..K
    std::uint64_t failure_count = 0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;

    const RewardTable& table() const noexcept { return lattice.table; }
    double ticks_per_unit() const noexcept { return lattice.ticks_per_unit; }
};

namespace detail {

inline HarqTableEstimate table_estimate_from_counts(const HarqConfig& config,
                                                    const EpisodeCounts& counts,
                                                    std::uint64_t n, std::uint64_t seed) {
    auto curve = curve_from_counts(counts, n);
    auto lattice = reward_table_outage_scaled(curve, config.rates, config.scheme);
    HarqTableEstimate est{std::move(curve), std::move(lattice), {}, counts.success,
                          counts.failure,  n,                   seed};
    est.entry_stderr.reserve(est.table().entries().size());
    for (const auto& e : est.table().entries())
        est.entry_stderr.push_back(
            std::sqrt(e.prob * (1.0 - e.prob) / static_cast<double>(n)));
    return est;
}

} // namespace detail

/// Estimates the outage curve from episode frequencies.
inline OutageCurve estimate_outage_curve(const HarqConfig& config, std::uint64_t n,
                                         std::uint64_t seed, int workers = 0) {
    config.validate();
    if (n < 1) throw std::invalid_argument("need at least one episode");
    return detail::curve_from_counts(detail::count_episodes(config, n, seed, workers), n);
}

/// Estimates the scheme's reward table from episode frequencies. The table is
/// built from the implied outage curve through the same scheme formulas as
/// the closed-form path, so probabilities are the exact frequencies.
inline HarqTableEstimate estimate_reward_table(const HarqConfig& config, std::uint64_t n,
                                               std::uint64_t seed, int workers = 0) {
    config.validate();
    if (n < 1) throw std::invalid_argument("need at least one episode");
    return detail::table_estimate_from_counts(
        config, detail::count_episodes(config, n, seed, workers), n, seed);
}

/// Direct path simulation of phi(t) = E[e^{-theta S_t}]: each path walks
/// renewals until time t; the still-open renewal pays nothing. Deterministic
/// pairwise reductions; a variance warning is attached when stderr/mean
/// exceeds 0.1 (rare-event regime for large theta * t).
inline McEstimate estimate_mgf_finite(const RewardTable& table, double theta, int t,
                                      std::uint64_t n, std::uint64_t seed,
                                      int workers = 0) {
    if (t < 1) throw std::invalid_argument("t must be >= 1");
    if (!(theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
    if (n < 1) throw std::invalid_argument("need at least one path");

    const auto& entries = table.entries();
    std::vector<double> cumulative;
    cumulative.reserve(entries.size());
    double acc = 0.0;
    for (const auto& e : entries) {
        acc += e.prob;
        cumulative.push_back(acc);
    }

    std::vector<double> values(n);
    detail::parallel_chunks(n, workers, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            int time = 0;
            double reward_sum = 0.0;
            for (;;) {
                const double u = rng.next_unit();
                std::size_t idx = 0;
                while (idx + 1 < cumulative.size() && u > cumulative[idx]) ++idx;
                const auto& e = entries[idx];
                if (time + e.interarrival > t) break; // renewal still open at t
                time += e.interarrival;
                reward_sum += e.reward;
                if (time == t) break;
            }
            values[i] = std::exp(-theta * reward_sum);
        }
    });

    McEstimate est;
    est.samples = n;
    est.seed = seed;
    est.mean = detail::pairwise_sum(values) / static_cast<double>(n);
    if (n > 1) {
        const double mean = est.mean;
        const double ss = detail::pairwise_sum_transformed(
            values, [mean](double x) { return (x - mean) * (x - mean); });
        est.stderr_value = std::sqrt(ss / static_cast<double>(n - 1)) /
                           std::sqrt(static_cast<double>(n));
    }
    est.variance_warning = est.mean > 0.0 && est.stderr_value / est.mean > 0.1;
    return est;
}

struct CapacityEstimate {
    EcResult ec;
    double capacity_stderr = 0.0; // jackknife over episode blocks
    HarqTableEstimate table;
};

namespace detail {

/// Delete-one-block jackknife stderr of capacity_of(curve_from_counts(...)).
template <class CapacityFn>
double jackknife_stderr(const EpisodeCounts& total,
                        const std::vector<EpisodeCounts>& blocks, CapacityFn&& capacity_of) {
    if (blocks.size() < 2) return 0.0;
    const int k_max = static_cast<int>(total.success.size());
    std::vector<double> leave_out;
    leave_out.reserve(blocks.size());
    for (const auto& block : blocks) {
        EpisodeCounts rest(k_max);
        for (int k = 0; k < k_max; ++k)
            rest.success[static_cast<std::size_t>(k)] =
                total.success[static_cast<std::size_t>(k)] -
                block.success[static_cast<std::size_t>(k)];
        rest.failure = total.failure - block.failure;
        leave_out.push_back(capacity_of(curve_from_counts(rest, rest.total())));
    }
    double mean = 0.0;
    for (double c : leave_out) mean += c;
    mean /= static_cast<double>(leave_out.size());
    double ss = 0.0;
    for (double c : leave_out) ss += (c - mean) * (c - mean);
    const double b = static_cast<double>(leave_out.size());
    return std::sqrt(ss * (b - 1.0) / b);
}

} // namespace detail

/// Samples one batch of episodes and serves capacity estimates at any number
/// of QoS exponents from it (the theta sweep re-solves the root equation; the
/// channel is not re-simulated).
class HarqSampler {
public:
    HarqSampler(HarqConfig config, std::uint64_t n, std::uint64_t seed, int workers = 0,
                int jackknife_blocks = 64)
        : config_(std::move(config)), n_(n), seed_(seed) {
        config_.validate();
        if (n < 1) throw std::invalid_argument("need at least one episode");
        if (jackknife_blocks > 1 && n < static_cast<std::uint64_t>(jackknife_blocks))
            throw std::invalid_argument("need at least one episode per jackknife block");
        counts_ = detail::count_episodes(config_, n, seed, workers,
                                         jackknife_blocks > 1 ? &blocks_ : nullptr,
                                         jackknife_blocks);
    }

    const HarqConfig& config() const noexcept { return config_; }
    OutageCurve curve() const { return detail::curve_from_counts(counts_, n_); }
    HarqTableEstimate table_estimate() const {
        return detail::table_estimate_from_counts(config_, counts_, n_, seed_);
    }

    CapacityEstimate outage_capacity(double theta_norm) const {
        return capacity_with([&](const OutageCurve& curve) {
            return ec_outage_from_curve(curve, config_.rates, config_.scheme, theta_norm);
        });
    }

    CapacityEstimate max_arrival_capacity(double theta_norm) const {
        if (!is_fixed_rate(config_.scheme))
            throw std::invalid_argument(
                "max-arrival capacity is defined for fixed-rate schemes");
        return capacity_with([&](const OutageCurve& curve) {
            return ec_max_arrival(interarrival_pmf_from_outage(curve), config_.rates[0],
                                  theta_norm);
        });
    }

private:
    template <class EcFn>
    CapacityEstimate capacity_with(EcFn&& ec_of) const {
        CapacityEstimate out{EcResult{}, 0.0, table_estimate()};
        out.ec = ec_of(out.table.curve);
        out.capacity_stderr = detail::jackknife_stderr(
            counts_, blocks_, [&](const OutageCurve& c) { return ec_of(c).capacity; });
        return out;
    }

    HarqConfig config_;
    std::uint64_t n_;
    std::uint64_t seed_;
    detail::EpisodeCounts counts_;
    std::vector<detail::EpisodeCounts> blocks_;
};

/// Outage effective capacity from an estimated table, with a delete-one-block
/// jackknife standard error (64 blocks by default).
inline CapacityEstimate estimate_outage_capacity(const HarqConfig& config,
                                                 double theta_norm, std::uint64_t n,
                                                 std::uint64_t seed, int workers = 0,
                                                 int jackknife_blocks = 64) {
    return HarqSampler(config, n, seed, workers, jackknife_blocks)
        .outage_capacity(theta_norm);
}

/// Maximum-arrival-rate capacity (every cycle pays the rate) from estimated
/// episode frequencies; fixed-rate schemes only.
inline CapacityEstimate estimate_max_arrival_capacity(const HarqConfig& config,
                                                      double theta_norm, std::uint64_t n,
                                                      std::uint64_t seed, int workers = 0,
                                                      int jackknife_blocks = 64) {
    return HarqSampler(config, n, seed, workers, jackknife_blocks)
        .max_arrival_capacity(theta_norm);
}

} // namespace effcap
