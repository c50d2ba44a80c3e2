#pragma once

// Exhaustive rate-grid search maximizing the outage effective capacity per
// scheme. Monte Carlo schemes share one seed across grid points (common
// random numbers) and run a coarse pass followed by a refined pass on the top
// slice, so the argmax is stable and reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "effcap/harq.hpp"
#include "effcap/mc.hpp"

namespace effcap {

struct RateGrid {
    std::vector<double> initial;    // candidate first-round rates (> 0)
    std::vector<double> subsequent; // candidate rates for rounds 2..K

    void validate() const {
        auto strictly_increasing = [](const std::vector<double>& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (!(v[i] > v[i - 1])) return false;
            return true;
        };
        if (initial.empty()) throw std::invalid_argument("rate grid needs initial candidates");
        if (!strictly_increasing(initial) || !strictly_increasing(subsequent))
            throw std::invalid_argument("rate grid values must be strictly increasing");
        for (double r : initial)
            if (!(r > 0.0)) throw std::invalid_argument("initial rates must be > 0");
        for (double r : subsequent)
            if (!(r >= 0.0)) throw std::invalid_argument("rates must be >= 0");
    }

    /// Default search grids: quarter steps on [1.5, 3.75] everywhere, with 0
    /// also allowed in later rounds for cross-packet transmission.
    static RateGrid default_grid(HarqScheme scheme) {
        RateGrid g;
        for (int i = 0; i < 10; ++i) g.initial.push_back(1.5 + 0.25 * i);
        if (scheme == HarqScheme::Xp)
            for (int i = 0; i < 16; ++i) g.subsequent.push_back(0.25 * i);
        else if (!is_fixed_rate(scheme))
            g.subsequent = g.initial;
        return g;
    }
};

struct GridPoint {
    std::vector<double> rates;
    double capacity = 0.0;
    double capacity_stderr = 0.0;
    bool refined = false;
};

struct OptimizeOptions {
    double theta = 1e-3;               // normalized QoS exponent
    std::uint64_t coarse_samples = 20000;
    double refine_factor = 10.0;       // refined pass sample multiplier
    double top_fraction = 0.1;         // slice of points to refine (min 3)
    std::uint64_t seed = 0;
    int workers = 0;
    std::uint64_t max_grid_points = 1'000'000;
};

struct OptimizeResult {
    std::vector<double> best_rates;
    double best_capacity = 0.0;
    double best_stderr = 0.0;
    std::vector<GridPoint> points; // lexicographic grid order
};

namespace detail {

inline std::vector<std::vector<double>> enumerate_rate_vectors(HarqScheme scheme,
                                                               const RateGrid& grid,
                                                               int max_rounds,
                                                               std::uint64_t max_points) {
    grid.validate();
    const int tail_rounds = is_fixed_rate(scheme) ? 0 : max_rounds - 1;
    if (tail_rounds > 0 && grid.subsequent.empty())
        throw std::invalid_argument("rate grid needs subsequent candidates for this scheme");
    double count = static_cast<double>(grid.initial.size());
    for (int i = 0; i < tail_rounds; ++i) count *= static_cast<double>(grid.subsequent.size());
    if (count > static_cast<double>(max_points))
        throw GridTooLarge("rate grid exceeds the exhaustive-search budget");

    std::vector<std::vector<double>> vectors;
    vectors.reserve(static_cast<std::size_t>(count));
    std::vector<std::size_t> odo(static_cast<std::size_t>(tail_rounds), 0);
    for (std::size_t i0 = 0; i0 < grid.initial.size(); ++i0) {
        std::fill(odo.begin(), odo.end(), 0);
        for (;;) {
            std::vector<double> rates;
            rates.reserve(static_cast<std::size_t>(1 + tail_rounds));
            rates.push_back(grid.initial[i0]);
            for (std::size_t j = 0; j < odo.size(); ++j)
                rates.push_back(grid.subsequent[odo[j]]);
            vectors.push_back(std::move(rates));
            int pos = tail_rounds - 1;
            while (pos >= 0) {
                if (++odo[static_cast<std::size_t>(pos)] < grid.subsequent.size()) break;
                odo[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
    }
    return vectors;
}

} // namespace detail

/// Evaluates the outage effective capacity at one rate point (closed form for
/// type1/cc, Monte Carlo otherwise).
inline GridPoint evaluate_rate_point(HarqScheme scheme, const HarqConfig& templ,
                                     const std::vector<double>& rates, double theta,
                                     std::uint64_t samples, std::uint64_t seed,
                                     int workers) {
    HarqConfig config = templ;
    config.scheme = scheme;
    config.rates = is_fixed_rate(scheme) ? std::vector<double>{rates[0]} : rates;
    GridPoint point;
    point.rates = rates;
    if (scheme == HarqScheme::TypeI || scheme == HarqScheme::Cc) {
        point.capacity = ec_outage(config, theta).capacity;
        point.capacity_stderr = 0.0;
    } else {
        const auto est = estimate_outage_capacity(config, theta, samples, seed, workers);
        point.capacity = est.ec.capacity;
        point.capacity_stderr = est.capacity_stderr;
    }
    return point;
}

/// Exhaustive search over the rate grid. Closed-form schemes are evaluated
/// exactly; Monte Carlo schemes get a coarse pass at `coarse_samples` and a
/// refined pass (refine_factor more episodes, same seed) on the top slice.
/// Ties break toward the lexicographically smallest rate vector.
inline OptimizeResult optimize_rates(HarqScheme scheme, const RateGrid& grid,
                                     const HarqConfig& templ,
                                     const OptimizeOptions& opt = {}) {
    const auto vectors = detail::enumerate_rate_vectors(scheme, grid, templ.max_rounds,
                                                        opt.max_grid_points);
    const bool closed_form = scheme == HarqScheme::TypeI || scheme == HarqScheme::Cc;

    OptimizeResult result;
    result.points.reserve(vectors.size());
    for (const auto& rates : vectors) {
        GridPoint p = evaluate_rate_point(scheme, templ, rates, opt.theta,
                                          opt.coarse_samples, opt.seed, opt.workers);
        p.refined = closed_form;
        result.points.push_back(std::move(p));
    }

    if (!closed_form) {
        const std::size_t top =
            std::min(vectors.size(),
                     std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(
                                                  opt.top_fraction *
                                                  static_cast<double>(vectors.size())))));
        std::vector<std::size_t> order(vectors.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return result.points[a].capacity > result.points[b].capacity;
        });
        const auto refined_samples = static_cast<std::uint64_t>(
            static_cast<double>(opt.coarse_samples) * opt.refine_factor);
        for (std::size_t r = 0; r < top; ++r) {
            auto& p = result.points[order[r]];
            GridPoint fine = evaluate_rate_point(scheme, templ, p.rates, opt.theta,
                                                 refined_samples, opt.seed, opt.workers);
            p.capacity = fine.capacity;
            p.capacity_stderr = fine.capacity_stderr;
            p.refined = true;
        }
    }

    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        if (!result.points[i].refined) continue;
        if (!found || result.points[i].capacity > result.points[best].capacity) {
            best = i;
            found = true;
        }
    }
    result.best_rates = result.points[best].rates;
    result.best_capacity = result.points[best].capacity;
    result.best_stderr = result.points[best].capacity_stderr;
    return result;
}

} // namespace effcap
