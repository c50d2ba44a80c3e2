#pragma once

// Effective capacity for the general renewal reward process: rewards depend
// on the interarrival time and a per-renewal termination state. Houses the
// coefficient vector a_kappa, the spectral root, LTAT, the small-exponent
// expansion, bounds, and the continuous-case root equation.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "effcap/renewal.hpp"

namespace effcap {

struct RewardEntry {
    int interarrival = 1;   // lattice ticks, >= 1
    std::string state;      // termination-state label
    double prob = 0.0;
    double reward = 0.0;    // >= 0, reward units
};

/// Joint table of renewal states (k, s) with probabilities q_{k,s} and
/// rewards R_{k,s}. Zero-probability entries are dropped and probabilities
/// renormalized by their exact sum (required to be 1 within 1e-9); insertion
/// order is preserved (it breaks ties in the bound minimizer).
class RewardTable {
public:
    explicit RewardTable(std::vector<RewardEntry> entries) : entries_(std::move(entries)) {
        std::erase_if(entries_, [](const RewardEntry& e) { return e.prob == 0.0; });
        if (entries_.empty())
            throw std::invalid_argument("reward table needs at least one entry with q > 0");
        double sum = 0.0;
        std::set<std::pair<int, std::string>> seen;
        for (const auto& e : entries_) {
            if (e.interarrival < 1)
                throw std::invalid_argument("interarrival must be >= 1 lattice tick");
            if (!(e.prob > 0.0) || e.prob > 1.0 + 1e-9)
                throw std::invalid_argument("entry probability must lie in (0, 1]");
            if (!(e.reward >= 0.0) || !std::isfinite(e.reward))
                throw std::invalid_argument("rewards must be finite and >= 0");
            if (!seen.insert({e.interarrival, e.state}).second)
                throw std::invalid_argument("duplicate (interarrival, state) pair");
            sum += e.prob;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("reward table must sum to 1 (got " +
                                        std::to_string(sum) + ")");
        for (auto& e : entries_) e.prob /= sum;

        k_max_ = 0;
        mean_x_ = mean_r_ = max_r_ = 0.0;
        for (const auto& e : entries_) {
            k_max_ = std::max(k_max_, e.interarrival);
            mean_x_ += e.prob * e.interarrival;
            mean_r_ += e.prob * e.reward;
            max_r_ = std::max(max_r_, e.reward);
        }
    }

    /// Constant-reward view of an interarrival pmf (requires q0 = 0).
    static RewardTable constant_reward(const InterarrivalPmf& pmf, double reward) {
        if (pmf.prob(0) != 0.0)
            throw std::invalid_argument("reward tables start at interarrival 1 (q0 must be 0)");
        std::vector<RewardEntry> entries;
        for (int k = 1; k <= pmf.max_interarrival(); ++k)
            if (pmf.prob(k) > 0.0) entries.push_back({k, "S", pmf.prob(k), reward});
        return RewardTable(std::move(entries));
    }

    const std::vector<RewardEntry>& entries() const noexcept { return entries_; }
    int max_interarrival() const noexcept { return k_max_; }
    double mean_interarrival() const noexcept { return mean_x_; }
    double mean_reward() const noexcept { return mean_r_; }
    double max_reward() const noexcept { return max_r_; }

private:
    std::vector<RewardEntry> entries_;
    int k_max_ = 0;
    double mean_x_ = 0.0;
    double mean_r_ = 0.0;
    double max_r_ = 0.0;
};

/// Difference-equation coefficients a_kappa = sum_s q_{kappa,s} e^{-theta R_{kappa,s}},
/// kappa = 1..K. Index [i] holds a_{i+1}.
inline std::vector<double> coefficients_a(const RewardTable& table, double theta) {
    if (!(theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
    std::vector<double> a(static_cast<std::size_t>(table.max_interarrival()), 0.0);
    for (const auto& e : table.entries())
        a[static_cast<std::size_t>(e.interarrival - 1)] +=
            e.prob * std::exp(-theta * e.reward);
    return a;
}

/// Long-term average throughput E(R) / E(X), the theta -> 0 capacity limit.
inline double ltat(const RewardTable& table) noexcept {
    return table.mean_reward() / table.mean_interarrival();
}

namespace detail {

/// G(u) = ln sum_{k,s} q_{k,s} e^{-theta R_{k,s} + k u} and its slope,
/// evaluated entry-wise so extreme theta*R never underflows an intermediate
/// coefficient.
inline std::pair<double, double> table_log_mgf(const RewardTable& table, double theta,
                                               double u) noexcept {
    double max_term = neg_inf;
    for (const auto& e : table.entries())
        max_term = std::max(max_term,
                            std::log(e.prob) - theta * e.reward + e.interarrival * u);
    double sum = 0.0;
    double slope_num = 0.0;
    for (const auto& e : table.entries()) {
        const double w =
            std::exp(std::log(e.prob) - theta * e.reward + e.interarrival * u - max_term);
        sum += w;
        slope_num += e.interarrival * w;
    }
    return {max_term + std::log(sum), slope_num / sum};
}

} // namespace detail

/// Log-domain root of sum_kappa a_kappa zeta^kappa = 1; returns u = ln zeta.
/// Returns exactly 0 when every reward is zero (the root is zeta = 1).
inline double solve_log_zeta_variable(const RewardTable& table, double theta,
                                      const RootOptions& opt = {}) {
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("theta must be finite and >= 0");
    if (theta == 0.0 || table.max_reward() == 0.0) return 0.0;
    const double target = 0.0;
    const double upper = theta * ltat(table);
    auto g = [&](double u) { return detail::table_log_mgf(table, theta, u).first; };
    const auto bis = detail::bisect_increasing(g, 0.0, upper, target, opt);
    const double hi = upper * (bis.expansions > 0 ? std::pow(2.0, bis.expansions) : 1.0);
    return detail::newton_polish(
        [&](double u) { return detail::table_log_mgf(table, theta, u); }, bis.root,
        target, 0.0, hi);
}

inline double solve_zeta_variable(const RewardTable& table, double theta,
                                  const RootOptions& opt = {}) {
    return std::exp(solve_log_zeta_variable(table, theta, opt));
}

/// Two-term small-theta expansion
/// E(R)/E(X) - theta E{(R E(X) - E(R) X)^2} / (2 E(X)^3), exact finite sums.
inline double approx_variable(const RewardTable& table, double theta) {
    const double mean_x = table.mean_interarrival();
    const double mean_r = table.mean_reward();
    double cross = 0.0;
    for (const auto& e : table.entries()) {
        const double d = e.reward * mean_x - mean_r * e.interarrival;
        cross += e.prob * d * d;
    }
    return mean_r / mean_x - theta * cross / (2.0 * mean_x * mean_x * mean_x);
}

/// Index of the lowest-reward entry with positive probability; ties go to the
/// smallest interarrival, then insertion order.
inline std::size_t min_reward_entry(const RewardTable& table) noexcept {
    const auto& es = table.entries();
    std::size_t best = 0;
    for (std::size_t i = 1; i < es.size(); ++i) {
        if (es[i].reward < es[best].reward ||
            (es[i].reward == es[best].reward &&
             es[i].interarrival < es[best].interarrival))
            best = i;
    }
    return best;
}

/// Bound pair R_min/K <= C_e <= min(R_min/k_min - ln(q_min)/(k_min theta), LTAT).
inline std::pair<double, double> bounds_variable(const RewardTable& table, double theta) {
    const auto& e = table.entries()[min_reward_entry(table)];
    const double lower = e.reward / table.max_interarrival();
    double theta_term;
    const double log_q = std::log(e.prob);
    if (log_q == 0.0)
        theta_term = e.reward / e.interarrival;
    else if (theta > 0.0)
        theta_term = e.reward / e.interarrival - log_q / (e.interarrival * theta);
    else
        theta_term = detail::pos_inf;
    return {lower, std::min(theta_term, ltat(table))};
}

inline EcResult effective_capacity_variable(const RewardTable& table, double theta,
                                            const RootOptions& opt = {}) {
    EcResult r;
    r.ltat = ltat(table);
    if (theta == 0.0) {
        r.capacity = r.ltat;
    } else {
        r.log_zeta = solve_log_zeta_variable(table, theta, opt);
        r.capacity = r.log_zeta / theta;
    }
    r.zeta = std::exp(r.log_zeta);
    const auto [lo, hi] = bounds_variable(table, theta);
    r.lower_bound = lo;
    r.upper_bound = hi;
    r.approx_small_theta = approx_variable(table, theta);
    return r;
}

/// Continuous-case root of E(e^{-theta R(X,S)} zeta^X) = 1. The evaluator
/// maps (theta, u) to ln E(e^{-theta R(X,S)} e^{u X}); the bracket is grown
/// geometrically from u = 1 since no moment information is assumed.
template <std::invocable<double, double> JointLogMgf>
double solve_log_zeta_variable_continuous(JointLogMgf&& joint, double theta,
                                          const RootOptions& opt = {}) {
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("theta must be finite and >= 0");
    auto g = [&](double u) { return joint(theta, u); };
    const auto bis = detail::bisect_increasing(g, 0.0, 1.0, 0.0, opt);
    const double value = g(bis.root);
    if (!std::isfinite(value) || std::abs(value) > 1e-6) {
        if (bis.saw_nonfinite || !std::isfinite(value))
            throw EvaluatorDiverged("joint mgf evaluator non-finite near the root");
        throw NonConvergence("continuous root residual above tolerance");
    }
    return bis.root;
}

template <std::invocable<double, double> JointLogMgf>
double solve_zeta_variable_continuous(JointLogMgf&& joint, double theta,
                                      const RootOptions& opt = {}) {
    return std::exp(solve_log_zeta_variable_continuous(std::forward<JointLogMgf>(joint),
                                                       theta, opt));
}

} // namespace effcap
