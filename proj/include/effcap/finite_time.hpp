#pragma once

// Finite-time mgf phi(t) = E[e^{-theta S_t}] by three mutually checking
// routes: exact enumeration over renewal count vectors, the linear
// recursion, and the residue/determinant closed form over the characteristic
// roots. The recursion runs in log domain so large t never underflows.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "effcap/detail/companion_roots.hpp"
#include "effcap/detail/math.hpp"
#include "effcap/reward.hpp"

namespace effcap {

/// phi(0..T) for one theta. Stored as ln phi; phi itself is exposed for
/// convenience but underflows for very large theta * t.
class PhiSeries {
public:
    PhiSeries(double theta, std::vector<double> log_values)
        : theta_(theta), log_values_(std::move(log_values)) {}

    double theta() const noexcept { return theta_; }
    int t_max() const noexcept { return static_cast<int>(log_values_.size()) - 1; }
    double log_value(int t) const { return log_values_.at(static_cast<std::size_t>(t)); }
    double value(int t) const { return std::exp(log_value(t)); }
    const std::vector<double>& log_values() const noexcept { return log_values_; }

private:
    double theta_;
    std::vector<double> log_values_;
};

namespace detail {

/// z^n for integer n >= 0 with z^0 = 1 (std::pow(0+0i, 0) is NaN).
inline std::complex<double> int_pow(std::complex<double> z, int n) noexcept {
    std::complex<double> result = 1.0;
    while (n > 0) {
        if (n & 1) result *= z;
        z *= z;
        n >>= 1;
    }
    return result;
}

/// tail[tau] = Pr(X > tau) for tau = 0..K-1 (tail[0] = 1).
inline std::vector<double> survival_tail(const RewardTable& table) {
    std::vector<double> tail(static_cast<std::size_t>(table.max_interarrival()), 0.0);
    for (const auto& e : table.entries())
        for (int tau = 0; tau < e.interarrival; ++tau)
            tail[static_cast<std::size_t>(tau)] += e.prob;
    return tail;
}

inline std::vector<double> log_coefficients(const RewardTable& table, double theta) {
    std::vector<LogSumExp> acc(static_cast<std::size_t>(table.max_interarrival()));
    for (const auto& e : table.entries())
        acc[static_cast<std::size_t>(e.interarrival - 1)].add(std::log(e.prob) -
                                                              theta * e.reward);
    std::vector<double> log_a(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) log_a[i] = acc[i].value();
    return log_a;
}

} // namespace detail

/// Exact phi(t) as the sum over all renewal count vectors whose total time
/// lands in [max(0, t-K+1), t], each weighted by the multinomial coefficient,
/// the state probabilities, the reward exponent, and the survival factor of
/// the still-open renewal. The multinomial factor is accumulated through
/// lgamma so counts never overflow.
inline double phi_enumeration(const RewardTable& table, double theta, int t,
                              std::uint64_t max_vectors = 10'000'000) {
    if (t < 0) throw std::invalid_argument("t must be >= 0");
    if (!(theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
    const auto& entries = table.entries();
    const auto tail = detail::survival_tail(table);
    const int window_lo = std::max(0, t - table.max_interarrival() + 1);

    double total = 0.0;
    std::uint64_t visited = 0;

    // log_w accumulates n_i ln q_i - theta n_i R_i - ln(n_i!) along the path.
    auto rec = [&](auto&& self, std::size_t idx, int time_used, std::int64_t n_total,
                   double log_w) -> void {
        if (idx == entries.size()) {
            if (++visited > max_vectors)
                throw EnumerationTooLarge("enumeration exceeds the count-vector budget");
            if (time_used < window_lo) return;
            const int tau = t - time_used;
            const double tail_factor = (tau == 0) ? 1.0 : tail[static_cast<std::size_t>(tau)];
            total += std::exp(std::lgamma(static_cast<double>(n_total) + 1.0) + log_w) *
                     tail_factor;
            return;
        }
        const auto& e = entries[idx];
        const double log_q = std::log(e.prob);
        for (int n = 0; time_used + n * e.interarrival <= t; ++n) {
            self(self, idx + 1, time_used + n * e.interarrival, n_total + n,
                 log_w + n * (log_q - theta * e.reward) -
                     std::lgamma(static_cast<double>(n) + 1.0));
        }
    };
    rec(rec, 0, 0, 0, 0.0);
    return total;
}

/// phi(0..T) by the renewal recursion
///   phi(t) = sum_{kappa <= min(t,K)} a_kappa phi(t - kappa) + Pr(X > t),
/// where the survival term vanishes for t >= K; this reproduces the
/// homogeneous difference equation there and the exact finite-time values
/// below K. Computed in log domain.
inline PhiSeries phi_recursion(const RewardTable& table, double theta, int t_max) {
    if (t_max < 0) throw std::invalid_argument("t_max must be >= 0");
    const int k_max = table.max_interarrival();
    const auto log_a = detail::log_coefficients(table, theta);
    const auto tail = detail::survival_tail(table);

    std::vector<double> log_phi(static_cast<std::size_t>(t_max) + 1, 0.0);
    for (int t = 1; t <= t_max; ++t) {
        detail::LogSumExp acc;
        for (int kappa = 1; kappa <= std::min(t, k_max); ++kappa)
            acc.add(log_a[static_cast<std::size_t>(kappa - 1)] +
                    log_phi[static_cast<std::size_t>(t - kappa)]);
        if (t < k_max && tail[static_cast<std::size_t>(t)] > 0.0)
            acc.add(std::log(tail[static_cast<std::size_t>(t)]));
        log_phi[static_cast<std::size_t>(t)] = acc.value();
    }
    return PhiSeries(theta, std::move(log_phi));
}

/// Roots of the characteristic polynomial z^K - sum_kappa a_kappa z^{K-kappa},
/// computed as companion-matrix eigenvalues.
inline std::vector<std::complex<double>> characteristic_roots(const RewardTable& table,
                                                              double theta) {
    return detail::companion_roots(coefficients_a(table, theta));
}

/// Closed-form phi(t), t >= K, evaluated as the residue sum over the K
/// characteristic roots (the Laplace-expanded form of the determinant ratio
/// det B_l / det A; both forms agree and the tests check the literal
/// determinants on small K). Requires pairwise root separation >= the given
/// threshold, else CoincidentRoots.
inline double phi_determinant(const RewardTable& table, double theta, int t,
                              double min_root_separation = 1e-8) {
    const int k_max = table.max_interarrival();
    if (t < k_max) throw std::invalid_argument("determinant form needs t >= K");
    const auto a = coefficients_a(table, theta);
    const auto roots = detail::companion_roots(a);
    const std::size_t n = roots.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(roots[i] - roots[j]) < min_root_separation)
                throw CoincidentRoots("characteristic roots closer than separation threshold");

    const PhiSeries head = phi_recursion(table, theta, k_max - 1);

    std::complex<double> phi_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> z = roots[i];
        // Powers z^e for e in [t-K, t-1].
        std::vector<std::complex<double>> zp(static_cast<std::size_t>(k_max) + 1);
        zp[0] = detail::int_pow(z, t - k_max);
        for (std::size_t e = 1; e < zp.size(); ++e) zp[e] = zp[e - 1] * z;

        std::complex<double> numer = 0.0;
        for (int kappa = 1; kappa <= k_max; ++kappa) {
            if (a[static_cast<std::size_t>(kappa - 1)] == 0.0) continue;
            for (int l = 1; l <= kappa; ++l) {
                const int exponent = t + l - kappa - 1; // in [t-K, t-1]
                numer += a[static_cast<std::size_t>(kappa - 1)] * head.value(k_max - l) *
                         zp[static_cast<std::size_t>(exponent - (t - k_max))];
            }
        }
        std::complex<double> denom = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) denom *= (z - roots[j]);
        phi_t += numer / denom;
    }
    if (std::abs(phi_t.imag()) > std::max(1e-8, 1e-8 * std::abs(phi_t.real())))
        throw NonConvergence("residue sum left a non-negligible imaginary part");
    return phi_t.real();
}

/// Finite-time effective capacity -ln phi(t) / (theta t); converges to the
/// spectral-root capacity as t grows.
inline double effective_capacity_finite(const RewardTable& table, double theta, int t) {
    if (t < 1) throw std::invalid_argument("finite-time capacity needs t >= 1");
    detail::require_positive_finite(theta, "theta");
    const PhiSeries series = phi_recursion(table, theta, t);
    return -series.log_value(t) / (theta * static_cast<double>(t));
}

} // namespace effcap
