#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace effcap::detail {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Streaming log-sum-exp accumulator. add() takes log-domain terms;
/// -inf terms are ignored.
class LogSumExp {
public:
    void add(double log_term) noexcept {
        if (log_term == neg_inf) return;
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }
    double value() const noexcept {
        if (max_ == neg_inf) return neg_inf;
        return max_ + std::log(sum_);
    }

private:
    double max_ = neg_inf;
    double sum_ = 0.0;
};

/// Deterministic pairwise summation. The reduction tree depends only on the
/// length, so the result is independent of how the values were produced
/// (worker counts, chunk boundaries).
inline double pairwise_sum(std::span<const double> v) noexcept {
    if (v.size() <= 64) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

template <class F>
double pairwise_sum_transformed(std::span<const double> v, F&& f) noexcept {
    if (v.size() <= 64) {
        double s = 0.0;
        for (double x : v) s += f(x);
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum_transformed(v.first(half), f) +
           pairwise_sum_transformed(v.subspan(half), f);
}

} // namespace effcap::detail
