#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "effcap/detail/math.hpp"
#include "effcap/errors.hpp"

namespace effcap {

/// Tolerances for the spectral-root bisection. The tolerance is absolute in
/// u = ln(zeta).
struct RootOptions {
    double u_tol = 1e-12;
    int max_iterations = 200;
    int max_expansions = 60;
};

namespace detail {

struct RootResult {
    double root = 0.0;
    int iterations = 0;
    int expansions = 0;
    bool saw_nonfinite = false;
};

/// Bisection for an increasing function f on [lo, hi] with f(lo) <= target.
/// Non-finite values of f are treated as "above target" so mgf evaluators may
/// blow up inside the bracket without breaking the search. If f(hi) is still
/// below the target (analytic brackets can be tight to roundoff), the upper
/// end is enlarged geometrically before bisecting.
template <class F>
RootResult bisect_increasing(F&& f, double lo, double hi, double target,
                             const RootOptions& opt = {}) {
    RootResult res;

    const double flo = f(lo);
    if (!(flo < target)) {
        res.root = lo;
        return res;
    }

    auto above = [&](double value) {
        if (!std::isfinite(value)) {
            res.saw_nonfinite = true;
            return true;
        }
        return value >= target;
    };

    if (hi <= lo) hi = lo + std::max(1e-300, std::abs(lo) * 1e-16);
    double fhi = f(hi);
    while (std::isfinite(fhi) && fhi < target) {
        if (res.expansions >= opt.max_expansions)
            throw NonConvergence("bracket expansion exhausted before enclosing the root");
        hi += (hi - lo);
        ++res.expansions;
        fhi = f(hi);
    }
    if (!std::isfinite(fhi)) res.saw_nonfinite = true;

    while (hi - lo > opt.u_tol) {
        if (res.iterations >= opt.max_iterations)
            throw NonConvergence("bisection iteration budget exhausted");
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break; // interval below representable width
        if (above(f(mid)))
            hi = mid;
        else
            lo = mid;
        ++res.iterations;
    }
    res.root = lo + 0.5 * (hi - lo);
    if (res.root <= lo || res.root >= hi) res.root = lo;
    return res;
}

/// A few damped Newton steps clamped to [lo, hi]; fd returns (value, slope).
/// Brings the bisection root to near machine residual when the analytic slope
/// is available.
template <class FD>
double newton_polish(FD&& fd, double u, double target, double lo, double hi,
                     int steps = 3) {
    for (int i = 0; i < steps; ++i) {
        const auto [value, slope] = fd(u);
        if (!std::isfinite(value) || !std::isfinite(slope) || slope <= 0.0) break;
        const double step = (value - target) / slope;
        const double next = std::clamp(u - step, lo, hi);
        if (next == u) break;
        u = next;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(u))) break;
    }
    return u;
}

} // namespace detail
} // namespace effcap
