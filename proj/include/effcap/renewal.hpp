#pragma once

// Effective capacity of renewal service processes with a constant reward per
// renewal: spectral-root solving, small-exponent expansion, bounds, and the
// continuous-interarrival extension. All operations are pure functions of
// immutable values and safe to use concurrently.

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "effcap/detail/math.hpp"
#include "effcap/detail/solve.hpp"
#include "effcap/errors.hpp"

namespace effcap {

/// Probability mass function of the renewal interarrival time on an integer
/// lattice, q_k = Pr(X = k) for k = 0..K. Trailing zeros are trimmed at
/// construction so K is the true support maximum; probabilities are
/// renormalized by their exact sum (which must already be 1 within 1e-9).
class InterarrivalPmf {
public:
    explicit InterarrivalPmf(std::vector<double> probs) : probs_(std::move(probs)) {
        while (!probs_.empty() && probs_.back() == 0.0) probs_.pop_back();
        if (probs_.size() < 2)
            throw std::invalid_argument("interarrival pmf needs support at some k >= 1");
        double sum = 0.0;
        for (double q : probs_) {
            if (!(q >= 0.0) || q > 1.0 + 1e-9)
                throw std::invalid_argument("interarrival pmf entries must lie in [0, 1]");
            sum += q;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("interarrival pmf must sum to 1 (got " +
                                        std::to_string(sum) + ")");
        for (double& q : probs_) q /= sum;
        if (probs_[0] >= 1.0)
            throw std::invalid_argument("interarrival pmf must have q0 < 1");
        mean_ = 0.0;
        double second = 0.0;
        for (std::size_t k = 0; k < probs_.size(); ++k) {
            mean_ += static_cast<double>(k) * probs_[k];
            second += static_cast<double>(k) * static_cast<double>(k) * probs_[k];
        }
        variance_ = second - mean_ * mean_;
    }

    static InterarrivalPmf from_support(std::span<const std::pair<int, double>> support) {
        int k_max = 0;
        for (const auto& [k, q] : support) {
            if (k < 0) throw std::invalid_argument("interarrival index must be >= 0");
            k_max = std::max(k_max, k);
        }
        std::vector<double> probs(static_cast<std::size_t>(k_max) + 1, 0.0);
        for (const auto& [k, q] : support) probs[static_cast<std::size_t>(k)] += q;
        return InterarrivalPmf(std::move(probs));
    }

    int max_interarrival() const noexcept { return static_cast<int>(probs_.size()) - 1; }
    double prob(int k) const noexcept {
        return (k >= 0 && k < static_cast<int>(probs_.size()))
                   ? probs_[static_cast<std::size_t>(k)]
                   : 0.0;
    }
    const std::vector<double>& probs() const noexcept { return probs_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }

private:
    std::vector<double> probs_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

struct Moments {
    double mean;
    double variance;
};

inline Moments pmf_moments(const InterarrivalPmf& pmf) noexcept {
    return {pmf.mean(), pmf.variance()};
}

/// Solved effective-capacity bundle. zeta = exp(log_zeta) may overflow to
/// +inf for extreme theta * reward; log_zeta and capacity are always finite.
struct EcResult {
    double zeta = 1.0;
    double log_zeta = 0.0;          // u(theta) = ln zeta
    double capacity = 0.0;          // ln zeta / theta, reward units per lattice tick
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    double approx_small_theta = 0.0;
    double ltat = 0.0;              // E(reward) / E(X)
};

namespace detail {

/// Log-mgf of the interarrival pmf, h(u) = ln sum_k q_k e^{k u}, and its
/// slope h'(u). Evaluated with a running-max log-sum-exp so large u never
/// overflows.
inline std::pair<double, double> pmf_log_mgf(const InterarrivalPmf& pmf, double u) noexcept {
    const auto& q = pmf.probs();
    double max_term = neg_inf;
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        max_term = std::max(max_term, std::log(q[k]) + static_cast<double>(k) * u);
    }
    double sum = 0.0;
    double slope_num = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        const double w = std::exp(std::log(q[k]) + static_cast<double>(k) * u - max_term);
        sum += w;
        slope_num += static_cast<double>(k) * w;
    }
    return {max_term + std::log(sum), slope_num / sum};
}

inline void require_positive_finite(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument(std::string(name) + " must be finite and > 0");
}

} // namespace detail

/// Log-domain root of sum_k q_k zeta^k = e^{theta R}: returns u = ln zeta,
/// bisected on the Jensen bracket [0, theta R / E(X)].
inline double solve_log_zeta_constant(const InterarrivalPmf& pmf, double reward,
                                      double theta, const RootOptions& opt = {}) {
    detail::require_positive_finite(reward, "reward");
    detail::require_positive_finite(theta, "theta");
    const double target = theta * reward;
    const double upper = target / pmf.mean();
    auto h = [&](double u) { return detail::pmf_log_mgf(pmf, u).first; };
    const auto bis = detail::bisect_increasing(h, 0.0, upper, target, opt);
    const double hi = upper * (bis.expansions > 0 ? std::pow(2.0, bis.expansions) : 1.0);
    return detail::newton_polish([&](double u) { return detail::pmf_log_mgf(pmf, u); },
                                 bis.root, target, 0.0, hi);
}

inline double solve_zeta_constant(const InterarrivalPmf& pmf, double reward,
                                  double theta, const RootOptions& opt = {}) {
    return std::exp(solve_log_zeta_constant(pmf, reward, theta, opt));
}

/// Two-term small-theta expansion R/E(X) - theta R^2 Var(X) / (2 E(X)^3).
/// Asymptotic form; may go negative for large theta.
inline double approx_constant(const InterarrivalPmf& pmf, double reward, double theta) {
    const double mean = pmf.mean();
    return reward / mean -
           theta * reward * reward * pmf.variance() / (2.0 * mean * mean * mean);
}

/// Bound pair R/K <= C_e <= min(R/K - ln(q_K)/(K theta), R/E(X)).
inline std::pair<double, double> bounds_constant(const InterarrivalPmf& pmf,
                                                 double reward, double theta) {
    const double k_max = pmf.max_interarrival();
    const double lower = reward / k_max;
    const double log_qk = std::log(pmf.prob(pmf.max_interarrival()));
    double theta_term;
    if (log_qk == 0.0)
        theta_term = lower; // deterministic interarrival, the log term vanishes
    else if (theta > 0.0)
        theta_term = lower - log_qk / (k_max * theta);
    else
        theta_term = detail::pos_inf;
    return {lower, std::min(theta_term, reward / pmf.mean())};
}

inline EcResult effective_capacity_constant(const InterarrivalPmf& pmf, double reward,
                                            double theta, const RootOptions& opt = {}) {
    detail::require_positive_finite(reward, "reward");
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("theta must be finite and >= 0");
    EcResult r;
    r.ltat = reward / pmf.mean();
    if (theta == 0.0) {
        r.capacity = r.ltat; // continuity limit
    } else {
        r.log_zeta = solve_log_zeta_constant(pmf, reward, theta, opt);
        r.capacity = r.log_zeta / theta;
    }
    r.zeta = std::exp(r.log_zeta);
    const auto [lo, hi] = bounds_constant(pmf, reward, theta);
    r.lower_bound = lo;
    r.upper_bound = hi;
    r.approx_small_theta = approx_constant(pmf, reward, theta);
    return r;
}

/// Continuous-interarrival root: cumulant(u) = ln E(e^{u X}) is solved for
/// cumulant(u*) = theta R, zeta = e^{u*}. E(X) may be passed explicitly;
/// otherwise it is taken as the cumulant's derivative at 0 by central
/// difference. Throws EvaluatorDiverged when the evaluator is non-finite at
/// the root (heavy-tailed X without a usable mgf bracket).
template <std::invocable<double> Cumulant>
double solve_log_zeta_continuous(Cumulant&& cumulant, double reward, double theta,
                                 double mean_interarrival =
                                     std::numeric_limits<double>::quiet_NaN(),
                                 const RootOptions& opt = {}) {
    detail::require_positive_finite(reward, "reward");
    detail::require_positive_finite(theta, "theta");
    double mean = mean_interarrival;
    if (std::isnan(mean)) {
        const double h = 1e-6;
        mean = (cumulant(h) - cumulant(-h)) / (2.0 * h);
    }
    detail::require_positive_finite(mean, "mean interarrival");

    const double target = theta * reward;
    const auto bis =
        detail::bisect_increasing([&](double u) { return cumulant(u); }, 0.0,
                                  target / mean, target, opt);
    const double value = cumulant(bis.root);
    const double residual_tol = 1e-6 * std::max(1.0, std::abs(target));
    if (!std::isfinite(value) || std::abs(value - target) > residual_tol) {
        if (bis.saw_nonfinite || !std::isfinite(value))
            throw EvaluatorDiverged("cumulant evaluator non-finite near the root");
        throw NonConvergence("continuous root residual above tolerance");
    }
    return bis.root;
}

template <std::invocable<double> Cumulant>
double solve_zeta_continuous(Cumulant&& cumulant, double reward, double theta,
                             double mean_interarrival =
                                 std::numeric_limits<double>::quiet_NaN(),
                             const RootOptions& opt = {}) {
    return std::exp(solve_log_zeta_continuous(std::forward<Cumulant>(cumulant), reward,
                                              theta, mean_interarrival, opt));
}

} // namespace effcap
