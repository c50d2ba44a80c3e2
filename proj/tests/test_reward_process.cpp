#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "effcap/renewal.hpp"
#include "effcap/reward.hpp"
#include "test_support.hpp"

using namespace effcap;

namespace {

RewardTable table_from(std::initializer_list<RewardEntry> entries) {
    return RewardTable(std::vector<RewardEntry>(entries));
}

// Positive root of a2 x^2 + a1 x = 1 by the quadratic formula.
double quadratic_root(double a1, double a2) {
    return (-a1 + std::sqrt(a1 * a1 + 4.0 * a2)) / (2.0 * a2);
}

RewardTable rescale_times(const RewardTable& table, int c, double reward_scale = 1.0) {
    std::vector<RewardEntry> entries;
    for (const auto& e : table.entries())
        entries.push_back({e.interarrival * c, e.state, e.prob, e.reward * reward_scale});
    return RewardTable(std::move(entries));
}

} // namespace

TEST_SUITE("reward_process") {

TEST_CASE("difference-equation coefficients") {
    auto a = coefficients_a(table_from({{1, "S", 1.0, 2.0}}), 1.0);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));

    const auto table = table_from({{1, "S", 0.6, 1.0}, {2, "S", 0.3, 1.0}, {2, "F", 0.1, 0.0}});
    a = coefficients_a(table, 0.0); // rewards vanish from the exponent
    CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(0.4).epsilon(1e-15));

    a = coefficients_a(table, 1.0);
    CHECK(a[0] == doctest::Approx(0.6 / std::numbers::e).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(0.3 / std::numbers::e + 0.1).epsilon(1e-15));
    CHECK(a[0] + a[1] < 1.0);
}

TEST_CASE("table validation") {
    CHECK_THROWS_AS(table_from({{0, "S", 1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(table_from({{1, "S", 0.5, 1.0}, {1, "S", 0.5, 2.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(table_from({{1, "S", 0.5, -1.0}, {2, "S", 0.5, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(table_from({{1, "S", 0.7, 1.0}, {2, "S", 0.7, 1.0}}),
                    std::invalid_argument);
    // zero-probability entries are dropped, K trims to the live support
    const auto t = table_from({{1, "S", 1.0, 1.0}, {3, "F", 0.0, 0.0}});
    CHECK(t.max_interarrival() == 1);
    CHECK(t.entries().size() == 1);
}

TEST_CASE("spectral root: single entry and zero rewards") {
    CHECK(solve_zeta_variable(table_from({{1, "S", 1.0, 2.5}}), 0.8) ==
          doctest::Approx(std::exp(0.8 * 2.5)).epsilon(1e-12));
    CHECK(solve_zeta_variable(table_from({{1, "S", 0.4, 0.0}, {2, "F", 0.6, 0.0}}), 3.0) ==
          doctest::Approx(1.0).epsilon(1e-15));
    const auto ec =
        effective_capacity_variable(table_from({{1, "S", 0.4, 0.0}, {2, "F", 0.6, 0.0}}), 3.0);
    CHECK(ec.capacity == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero exponent returns the throughput limit exactly") {
    const auto table =
        table_from({{1, "S", 0.6, 1.0}, {2, "S", 0.3, 1.0}, {2, "F", 0.1, 0.0}});
    const auto ec = effective_capacity_variable(table, 0.0);
    CHECK(ec.capacity == ltat(table));
    CHECK(ec.zeta == 1.0);
    CHECK(ec.log_zeta == 0.0);
    CHECK(ec.upper_bound == ltat(table));
}

TEST_CASE("constant-reward table reduces to the constant solver") {
    const auto pmf = InterarrivalPmf::from_support(
        std::vector<std::pair<int, double>>{{1, 0.5}, {2, 0.5}});
    const double via_table =
        solve_zeta_variable(RewardTable::constant_reward(pmf, 1.0), 1.0);
    CHECK(via_table == doctest::Approx(solve_zeta_constant(pmf, 1.0, 1.0)).epsilon(1e-13));
    // and both equal the quadratic oracle on 0.5 z + 0.5 z^2 = e
    CHECK(via_table ==
          doctest::Approx((-1.0 + std::sqrt(1.0 + 8.0 * std::numbers::e)) / 2.0)
              .epsilon(1e-13));
}

TEST_CASE("mixed success/failure table against the quadratic oracle") {
    const auto table =
        table_from({{1, "S", 0.6, 1.0}, {2, "S", 0.3, 1.0}, {2, "F", 0.1, 0.0}});
    const double a1 = 0.6 / std::numbers::e;
    const double a2 = 0.3 / std::numbers::e + 0.1;
    const double zeta = solve_zeta_variable(table, 1.0);
    CHECK(zeta == doctest::Approx(quadratic_root(a1, a2)).epsilon(1e-13));
    CHECK(effective_capacity_variable(table, 1.0).capacity ==
          doctest::Approx(std::log(quadratic_root(a1, a2))).epsilon(1e-12));
}

TEST_CASE("reduction property on random instances") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const auto pmf = test_support::random_pmf(rng, 5);
        if (pmf.prob(0) != 0.0) continue;
        std::uniform_real_distribution<double> rd(0.2, 3.0);
        std::uniform_real_distribution<double> td(0.05, 2.0);
        const double reward = rd(rng);
        const double theta = td(rng);
        const double a = solve_zeta_constant(pmf, reward, theta);
        const double b = solve_zeta_variable(RewardTable::constant_reward(pmf, reward), theta);
        CHECK(std::abs(a - b) <= 1e-12 * a);
    }
}

TEST_CASE("long-term average throughput") {
    CHECK(ltat(table_from({{1, "S", 1.0, 3.0}})) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(ltat(table_from({{1, "S", 0.5, 2.0}, {2, "S", 0.5, 2.0}})) ==
          doctest::Approx(2.0 / 1.5).epsilon(1e-15));
}

TEST_CASE("two-term approximation") {
    // constant reward, deterministic interarrival: expansion is exact
    CHECK(approx_variable(table_from({{2, "S", 1.0, 3.0}}), 0.7) ==
          doctest::Approx(1.5).epsilon(1e-15));

    // constant-reward table collapses to the constant-case formula
    const auto pmf = InterarrivalPmf::from_support(
        std::vector<std::pair<int, double>>{{1, 0.3}, {3, 0.7}});
    CHECK(approx_variable(RewardTable::constant_reward(pmf, 2.0), 0.05) ==
          doctest::Approx(approx_constant(pmf, 2.0, 0.05)).epsilon(1e-12));

    // direct moment computation: E(X) = 1.5, E(R) = 2, E{(R E(X) - E(R) X)^2} = 1
    const auto table = table_from({{1, "S", 0.5, 2.0}, {2, "S", 0.5, 2.0}});
    CHECK(approx_variable(table, 0.01) ==
          doctest::Approx(4.0 / 3.0 - 0.01 * 1.0 / (2.0 * 3.375)).epsilon(1e-14));
}

TEST_CASE("bounds: outage table, constant reduction, large-theta squeeze") {
    const auto outage =
        table_from({{1, "S", 0.6, 4.0}, {2, "S", 0.3, 4.0}, {2, "F", 0.1, 0.0}});
    auto b = bounds_variable(outage, 1.0);
    CHECK(b.first == doctest::Approx(0.0).epsilon(1e-15)); // min reward is the failure state
    CHECK(b.second <= ltat(outage) + 1e-15);

    const auto pmf = InterarrivalPmf::from_support(
        std::vector<std::pair<int, double>>{{1, 0.5}, {2, 0.5}});
    const auto constant = RewardTable::constant_reward(pmf, 1.0);
    const auto bc = bounds_constant(pmf, 1.0, 1.0);
    b = bounds_variable(constant, 1.0);
    CHECK(b.first == doctest::Approx(bc.first).epsilon(1e-14));
    CHECK(b.second == doctest::Approx(bc.second).epsilon(1e-14));

    // theta -> infinity: capacity squeezed into [R_min/K, R_min/k_min]
    const auto ec = effective_capacity_variable(outage, 1e5);
    CHECK(ec.capacity >= 0.0 - 1e-12);
    CHECK(ec.capacity <= -std::log(0.1) / (2.0 * 1e5) + 1e-9);
}

TEST_CASE("outage-style table respects the failure-mass ceiling at huge theta") {
    const auto table =
        table_from({{1, "S", 0.55, 2.0}, {3, "S", 0.35, 2.0}, {3, "F", 0.10, 0.0}});
    const auto ec = effective_capacity_variable(table, 1e4);
    CHECK(ec.capacity <= -std::log(0.10) / (3.0 * 1e4) + 1e-9);
}

TEST_CASE("monotonicity and bound sandwich on random tables") {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 25; ++i) {
        const auto table = test_support::random_table(rng);
        double previous = effcap::detail::pos_inf;
        for (int g = 0; g < 50; ++g) {
            const double theta = std::pow(10.0, -4.0 + 6.0 * g / 49.0);
            const auto ec = effective_capacity_variable(table, theta);
            CHECK(ec.capacity <= previous * (1.0 + 1e-12) + 1e-12);
            CHECK(ec.lower_bound <= ec.capacity + 1e-9);
            CHECK(ec.capacity <= ec.upper_bound + 1e-9);
            CHECK(ec.capacity <= ec.ltat + 1e-9);
            previous = ec.capacity;
        }
        CHECK(std::abs(effective_capacity_variable(table, 1e-8).capacity - ltat(table)) <=
              1e-4 * ltat(table));
    }
}

TEST_CASE("lattice refinement scaling") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 10; ++i) {
        const auto table = test_support::random_table(rng);
        const double theta = 0.7;
        const double base = effective_capacity_variable(table, theta).capacity;
        for (int c : {2, 3}) {
            // time-only refinement: per-tick capacity scales by 1/c at any theta
            const auto refined = rescale_times(table, c);
            CHECK(static_cast<double>(c) *
                      effective_capacity_variable(refined, theta).capacity ==
                  doctest::Approx(base).epsilon(1e-10));
            CHECK(static_cast<double>(c) *
                      effective_capacity_variable(refined, theta / c).capacity ==
                  doctest::Approx(
                      effective_capacity_variable(table, theta / c).capacity)
                      .epsilon(1e-10));
            // full unit change (times and rewards scaled, exponent divided)
            const auto rescaled = rescale_times(table, c, static_cast<double>(c));
            CHECK(effective_capacity_variable(rescaled, theta / c).capacity ==
                  doctest::Approx(base).epsilon(1e-10));
        }
    }
}

TEST_CASE("continuous-case root equation") {
    // degenerate X == 1, R == R0: root is e^{theta R0}
    auto degenerate = [](double theta, double u) { return -theta * 2.0 + u; };
    CHECK(solve_zeta_variable_continuous(degenerate, 0.9) ==
          doctest::Approx(std::exp(0.9 * 2.0)).epsilon(1e-12));

    // theta = 0 forces zeta = 1
    CHECK(solve_zeta_variable_continuous(degenerate, 0.0) ==
          doctest::Approx(1.0).epsilon(1e-15));

    // an exact table evaluator must reproduce the discrete solver
    const auto table =
        table_from({{1, "S", 0.6, 1.0}, {2, "S", 0.3, 1.0}, {2, "F", 0.1, 0.0}});
    auto joint = [&table](double theta, double u) {
        return effcap::detail::table_log_mgf(table, theta, u).first;
    };
    CHECK(solve_zeta_variable_continuous(joint, 1.0) ==
          doctest::Approx(solve_zeta_variable(table, 1.0)).epsilon(1e-9));
}

TEST_CASE("continuous root is the refinement limit of discretized tables") {
    // X ~ exponential(1), constant reward c: closed-form root
    // u* = theta c, via E(e^{-theta c} e^{uX}) = 1 => ln(1/(1-u)) = theta c.
    const double theta = 0.6;
    const double reward = 1.4;
    auto joint = [&](double th, double u) {
        if (u >= 1.0) return effcap::detail::pos_inf;
        return -th * reward + std::log(1.0 / (1.0 - u));
    };
    const double u_cont = solve_log_zeta_variable_continuous(joint, theta);
    CHECK(u_cont == doctest::Approx(1.0 - std::exp(-theta * reward)).epsilon(1e-9));

    double previous_error = effcap::detail::pos_inf;
    for (double delta : {1.0, 0.5, 0.25}) {
        // ceil-discretization: q_k = Pr(X in ((k-1)d, k d]), truncated far out
        const int k_cap = static_cast<int>(std::ceil(40.0 / delta));
        std::vector<RewardEntry> entries;
        for (int k = 1; k <= k_cap; ++k) {
            const double q = std::exp(-(k - 1) * delta) - std::exp(-k * delta);
            if (q > 0.0) entries.push_back({k, "s" + std::to_string(k), q, reward});
        }
        entries.push_back({k_cap + 1, "tail", std::exp(-k_cap * delta), reward});
        const RewardTable table{std::move(entries)};
        const double u_unit = solve_log_zeta_variable(table, theta) / delta;
        const double error = std::abs(u_unit - u_cont);
        CHECK(error < previous_error);
        previous_error = error;
    }
    CHECK(previous_error < 0.1);
}

} // TEST_SUITE
