#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "effcap/renewal.hpp"
#include "test_support.hpp"

using namespace effcap;

namespace {

InterarrivalPmf pmf_from(std::initializer_list<std::pair<int, double>> support) {
    std::vector<std::pair<int, double>> v(support);
    return InterarrivalPmf::from_support(v);
}

// Root of 0.5 z + 0.5 z^2 = e by the quadratic formula.
double quadratic_oracle_zeta() { return (-1.0 + std::sqrt(1.0 + 8.0 * std::numbers::e)) / 2.0; }

} // namespace

TEST_SUITE("renewal_core") {

TEST_CASE("moments of small pmfs") {
    auto m = pmf_moments(pmf_from({{1, 1.0}}));
    CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.variance == doctest::Approx(0.0).epsilon(1e-15));

    m = pmf_moments(pmf_from({{1, 0.5}, {2, 0.5}}));
    CHECK(m.mean == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(m.variance == doctest::Approx(0.25).epsilon(1e-15));

    m = pmf_moments(pmf_from({{1, 0.2}, {5, 0.8}}));
    CHECK(m.mean == doctest::Approx(4.2).epsilon(1e-15));
    CHECK(m.variance == doctest::Approx(2.56).epsilon(1e-12));
}

TEST_CASE("pmf validation") {
    CHECK_THROWS_AS(InterarrivalPmf(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(InterarrivalPmf(std::vector<double>{0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(InterarrivalPmf(std::vector<double>{0.5, -0.1, 0.6}),
                    std::invalid_argument);
    // trailing zeros trimmed so K is the true support maximum
    const InterarrivalPmf pmf(std::vector<double>{0.0, 0.4, 0.6, 0.0, 0.0});
    CHECK(pmf.max_interarrival() == 2);
}

TEST_CASE("deterministic interarrival root") {
    const auto pmf = pmf_from({{1, 1.0}});
    CHECK(solve_zeta_constant(pmf, 2.0, 0.5) == doctest::Approx(std::numbers::e).epsilon(1e-12));
}

TEST_CASE("two-point pmf against the quadratic-formula oracle") {
    const auto pmf = pmf_from({{1, 0.5}, {2, 0.5}});
    const double zeta = solve_zeta_constant(pmf, 1.0, 1.0);
    CHECK(zeta == doctest::Approx(quadratic_oracle_zeta()).epsilon(1e-13));
    const auto ec = effective_capacity_constant(pmf, 1.0, 1.0);
    CHECK(ec.capacity == doctest::Approx(std::log(quadratic_oracle_zeta())).epsilon(1e-13));
}

TEST_CASE("large theta tends to the reward/K floor") {
    const auto pmf = pmf_from({{5, 1.0}});
    // point mass: zeta = e^{theta R / 5} exactly, capacity R/K at every theta
    for (double theta : {1.0, 50.0, 1e4}) {
        const auto ec = effective_capacity_constant(pmf, 4.0, theta);
        CHECK(ec.capacity == doctest::Approx(0.8).epsilon(1e-12));
    }
}

TEST_CASE("deterministic service capacity is the reward") {
    const auto pmf = pmf_from({{1, 1.0}});
    for (double theta : {1e-6, 0.3, 7.0, 200.0})
        CHECK(effective_capacity_constant(pmf, 3.0, theta).capacity ==
              doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("theta -> 0 recovers the long-term average throughput") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 20; ++i) {
        const auto pmf = test_support::random_pmf(rng);
        const double ltat_limit = 2.0 / pmf.mean();
        const auto ec = effective_capacity_constant(pmf, 2.0, 1e-8);
        CHECK(std::abs(ec.capacity - ltat_limit) <= 1e-5 * ltat_limit);
        CHECK(effective_capacity_constant(pmf, 2.0, 0.0).capacity ==
              doctest::Approx(ltat_limit).epsilon(1e-15));
    }
}

TEST_CASE("two-term approximation values") {
    CHECK(approx_constant(pmf_from({{1, 1.0}}), 5.0, 2.0) ==
          doctest::Approx(5.0).epsilon(1e-15));
    const auto pmf = pmf_from({{1, 0.5}, {2, 0.5}});
    CHECK(approx_constant(pmf, 1.0, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // hand evaluation: 2/3 - 0.01 * 0.25 / (2 * 1.5^3)
    CHECK(approx_constant(pmf, 1.0, 0.01) ==
          doctest::Approx(2.0 / 3.0 - 0.01 * 0.25 / 6.75).epsilon(1e-14));
}

TEST_CASE("bound pair values") {
    auto b = bounds_constant(pmf_from({{5, 1.0}}), 4.0, 3.0);
    CHECK(b.first == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(b.second == doctest::Approx(0.8).epsilon(1e-15));

    b = bounds_constant(pmf_from({{1, 1.0}}), 1.0, 1.0);
    CHECK(b.first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b.second == doctest::Approx(1.0).epsilon(1e-15));

    b = bounds_constant(pmf_from({{1, 0.5}, {2, 0.5}}), 1.0, 1.0);
    CHECK(b.first == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(b.second == doctest::Approx(2.0 / 3.0).epsilon(1e-15)); // ltat term wins
}

TEST_CASE("root residual and bracket on random pmfs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        const auto pmf = test_support::random_pmf(rng, 6, true);
        std::uniform_real_distribution<double> thetas(-6.0, std::log10(50.0));
        std::uniform_real_distribution<double> rewards(0.1, 5.0);
        const double theta = std::pow(10.0, thetas(rng));
        const double reward = rewards(rng);
        const double u = solve_log_zeta_constant(pmf, reward, theta);
        CHECK(u >= 0.0);
        CHECK(u <= theta * reward / pmf.mean() * (1.0 + 1e-12));
        const auto [value, slope] = effcap::detail::pmf_log_mgf(pmf, u);
        (void)slope;
        CHECK(std::abs(value - theta * reward) <= 1e-10);
    }
}

TEST_CASE("capacity is non-increasing in theta") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto pmf = test_support::random_pmf(rng);
        double previous = effcap::detail::pos_inf;
        for (int g = 0; g < 50; ++g) {
            const double theta = std::pow(10.0, -4.0 + 6.0 * g / 49.0);
            const auto ec = effective_capacity_constant(pmf, 2.0, theta);
            CHECK(ec.capacity <= previous * (1.0 + 1e-12) + 1e-12);
            CHECK(ec.lower_bound <= ec.capacity + 1e-9);
            CHECK(ec.capacity <= ec.upper_bound + 1e-9);
            CHECK(ec.capacity <= ec.ltat + 1e-9);
            previous = ec.capacity;
        }
    }
}

TEST_CASE("large-theta squeeze against the tail bound") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 10; ++i) {
        const auto pmf = test_support::random_pmf(rng);
        const double k_max = pmf.max_interarrival();
        const double q_k = pmf.prob(pmf.max_interarrival());
        const auto ec = effective_capacity_constant(pmf, 2.0, 1e4);
        CHECK(ec.capacity >= 2.0 / k_max - 1e-12);
        CHECK(ec.capacity - 2.0 / k_max <= -std::log(q_k) / (k_max * 1e4) + 1e-9);
    }
}

TEST_CASE("approximation error is second order in theta") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        const auto pmf = test_support::random_pmf(rng);
        auto ratio = [&](double theta) {
            const auto ec = effective_capacity_constant(pmf, 2.0, theta);
            return std::abs(ec.capacity - ec.approx_small_theta) / (theta * theta);
        };
        const double r2 = ratio(1e-2);
        CHECK(ratio(1e-3) <= 2.0 * r2 + 1e-6 * std::max(1.0, r2));
        CHECK(ratio(1e-4) <= 2.0 * r2 + 1e-6 * std::max(1.0, r2));
    }
}

TEST_CASE("continuous solver: point mass and exponential closed form") {
    // X == c: cumulant u -> c u, so zeta = e^{theta R / c}
    const double c = 3.0;
    const double zeta =
        solve_zeta_continuous([c](double u) { return c * u; }, 2.0, 1.5, c);
    CHECK(zeta == doctest::Approx(std::exp(1.5 * 2.0 / 3.0)).epsilon(1e-12));

    // X ~ exponential(lambda): capacity = lambda (1 - e^{-theta R}) / theta
    const double lambda = 2.0;
    auto cumulant = [lambda](double u) {
        if (u >= lambda) return effcap::detail::pos_inf;
        return std::log(lambda / (lambda - u));
    };
    const double u = solve_log_zeta_continuous(cumulant, 1.0, 1.0, 1.0 / lambda);
    CHECK(u / 1.0 == doctest::Approx(2.0 * (1.0 - std::exp(-1.0))).epsilon(1e-10));

    // derivative-at-zero mean detection gives the same root
    const double u2 = solve_log_zeta_continuous(cumulant, 1.0, 1.0);
    CHECK(u2 == doctest::Approx(u).epsilon(1e-9));
}

TEST_CASE("continuous solver rejects a heavy-tailed evaluator") {
    auto diverged = [](double u) {
        return u > 0.0 ? effcap::detail::pos_inf : 0.0;
    };
    CHECK_THROWS_AS(solve_log_zeta_continuous(diverged, 1.0, 1.0, 1.0),
                    EvaluatorDiverged);
}

TEST_CASE("iteration budget exhaustion reports non-convergence") {
    const auto pmf = pmf_from({{1, 0.5}, {2, 0.5}});
    RootOptions opt;
    opt.max_iterations = 0;
    CHECK_THROWS_AS(solve_log_zeta_constant(pmf, 1.0, 1.0, opt), NonConvergence);
}

} // TEST_SUITE
