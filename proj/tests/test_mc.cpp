#include <cmath>
#include <vector>

#include <doctest.h>

#include "effcap/finite_time.hpp"
#include "effcap/mc.hpp"
#include "test_support.hpp"

using namespace effcap;

TEST_SUITE("mc") {

TEST_CASE("counter stream is a pure function of (seed, index)") {
    CounterRng a(12345, 7);
    CounterRng b(12345, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CounterRng c(12345, 8);
    CounterRng d(12346, 7);
    CHECK(a.next_u64() != c.next_u64());
    CHECK(b.next_u64() != d.next_u64());
}

TEST_CASE("uniform and gamma sampler sanity") {
    CounterRng rng(99, 0);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_unit();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum_sq / n - 0.25 == doctest::Approx(1.0 / 12.0).epsilon(0.02));

    for (double shape : {0.5, 1.0, 2.7}) {
        CounterRng g(7, 1);
        double mean = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = g.next_gamma(shape);
            mean += x;
            m2 += x * x;
        }
        mean /= n;
        m2 = m2 / n - mean * mean;
        CHECK(mean == doctest::Approx(shape).epsilon(0.02));
        CHECK(m2 == doctest::Approx(shape).epsilon(0.05));
    }
    CHECK_THROWS_AS(rng.next_gamma(0.3), std::invalid_argument);
}

TEST_CASE("episode edge behavior") {
    // zero-ish rate: success at round one with probability one
    auto config = HarqConfig::defaults(HarqScheme::Ir);
    config.rates = {1e-12};
    for (std::uint64_t i = 0; i < 50; ++i) {
        CounterRng rng(3, i);
        const auto ep = sample_episode(config, rng);
        CHECK(ep.success);
        CHECK(ep.rounds_used == 1);
    }
    // vanishing SNR: failure at the truncation limit
    config.rates = {4.0};
    config.snr_db = -300.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        CounterRng rng(3, i);
        const auto ep = sample_episode(config, rng);
        CHECK_FALSE(ep.success);
        CHECK(ep.rounds_used == config.max_rounds);
    }
}

TEST_CASE("cross-packet with front-loaded rates replays incremental redundancy") {
    auto ir = HarqConfig::defaults(HarqScheme::Ir);
    auto xp = HarqConfig::defaults(HarqScheme::Xp); // rates (4, 0, 0, 0, 0)
    for (std::uint64_t i = 0; i < 2000; ++i) {
        CounterRng r1(11, i), r2(11, i);
        const auto a = sample_episode(ir, r1);
        const auto b = sample_episode(xp, r2);
        CHECK(a.success == b.success);
        CHECK(a.rounds_used == b.rounds_used);
    }
}

TEST_CASE("estimated curves are worker-count invariant and seed reproducible") {
    const auto config = HarqConfig::defaults(HarqScheme::Ir);
    const auto one = estimate_outage_curve(config, 50000, 2024, 1);
    const auto four = estimate_outage_curve(config, 50000, 2024, 4);
    const auto three = estimate_outage_curve(config, 50000, 2024, 3);
    for (std::size_t k = 0; k < one.p.size(); ++k) {
        CHECK(one.p[k] == four.p[k]);  // bit identical
        CHECK(one.p[k] == three.p[k]);
    }
    const auto other_seed = estimate_outage_curve(config, 50000, 2025, 1);
    bool any_diff = false;
    for (std::size_t k = 1; k < one.p.size(); ++k)
        if (one.p[k] != other_seed.p[k]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("pathwise scheme ordering under common randomness") {
    const int k_max = 5;
    const std::uint64_t n = 200000;
    auto t1 = HarqConfig::defaults(HarqScheme::TypeI);
    auto cc = HarqConfig::defaults(HarqScheme::Cc);
    auto ir = HarqConfig::defaults(HarqScheme::Ir);
    const auto c1 = estimate_outage_curve(t1, n, 5150);
    const auto c2 = estimate_outage_curve(cc, n, 5150);
    const auto c3 = estimate_outage_curve(ir, n, 5150);
    for (int k = 1; k <= k_max; ++k) {
        CHECK(c3.p[static_cast<std::size_t>(k)] <= c2.p[static_cast<std::size_t>(k)]);
        CHECK(c2.p[static_cast<std::size_t>(k)] <= c1.p[static_cast<std::size_t>(k)]);
    }
}

TEST_CASE("chase combining estimates match the Erlang closed form on a grid") {
    const std::uint64_t n = 1000000;
    std::uint64_t seed = 31337;
    for (double rate : {1.0, 2.0, 4.0}) {
        for (double snr_db : {5.0, 10.0, 20.0}) {
            auto config = HarqConfig::defaults(HarqScheme::Cc);
            config.rates = {rate};
            config.snr_db = snr_db;
            const auto curve = estimate_outage_curve(config, n, seed++);
            for (int k = 1; k <= config.max_rounds; ++k) {
                const double closed = outage_closed_form(config, k);
                const double sigma =
                    std::sqrt(closed * (1.0 - closed) / static_cast<double>(n));
                CHECK(std::abs(curve.p[static_cast<std::size_t>(k)] - closed) <=
                      3.0 * std::max(sigma, 1e-9));
            }
        }
    }
}

TEST_CASE("estimated tables normalize and degenerate cases behave") {
    const auto config = HarqConfig::defaults(HarqScheme::Ir);
    const auto est = estimate_reward_table(config, 1, 4);
    double sum = 0.0;
    for (const auto& e : est.table().entries()) sum += e.prob;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.table().entries().size() == 1);

    const auto big = estimate_reward_table(config, 20000, 4);
    sum = 0.0;
    for (const auto& e : big.table().entries()) sum += e.prob;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < big.curve.p.size(); ++i)
        CHECK(big.curve.p[i] <= big.curve.p[i - 1]);
}

TEST_CASE("mgf path estimator: exact cases") {
    // deterministic table: phi-hat is exact with zero spread (up to the
    // roundoff of averaging identical values)
    const auto det = RewardTable(std::vector<RewardEntry>{{1, "S", 1.0, 2.0}});
    auto est = estimate_mgf_finite(det, 0.5, 12, 2000, 9);
    CHECK(est.mean == doctest::Approx(std::exp(-0.5 * 2.0 * 12)).epsilon(1e-14));
    CHECK(est.stderr_value <= 1e-18);

    // theta = 0: the statistic is constant one
    std::mt19937_64 rng(67);
    const auto table = test_support::random_table(rng);
    est = estimate_mgf_finite(table, 0.0, 9, 2000, 10);
    CHECK(est.mean == 1.0);
    CHECK(est.stderr_value == 0.0);
}

TEST_CASE("mgf path estimator agrees with the recursion") {
    std::mt19937_64 rng(71);
    for (int i = 0; i < 4; ++i) {
        const auto table = test_support::random_table(rng, 2);
        const double theta = 0.4;
        const int t = 20;
        const auto est = estimate_mgf_finite(table, theta, t, 200000, 100 + i);
        const double exact = phi_recursion(table, theta, t).value(t);
        CHECK(std::abs(est.mean - exact) <= 3.0 * est.stderr_value + 1e-12);
    }
}

TEST_CASE("mgf path estimator is worker invariant") {
    std::mt19937_64 rng(73);
    const auto table = test_support::random_table(rng);
    const auto one = estimate_mgf_finite(table, 0.7, 15, 60000, 55, 1);
    const auto four = estimate_mgf_finite(table, 0.7, 15, 60000, 55, 4);
    CHECK(one.mean == four.mean); // bit identical
    CHECK(one.stderr_value == four.stderr_value);
}

TEST_CASE("variance warning fires in the rare-event regime") {
    const auto table = RewardTable(
        std::vector<RewardEntry>{{1, "S", 0.5, 10.0}, {1, "F", 0.5, 0.0}});
    const auto est = estimate_mgf_finite(table, 5.0, 30, 4000, 12);
    CHECK(est.variance_warning);
}

TEST_CASE("jackknife capacity estimates are reproducible and sensible") {
    auto config = HarqConfig::defaults(HarqScheme::Ir);
    config.snr_db = 10.0;
    const auto a = estimate_outage_capacity(config, 0.01, 64000, 77, 1);
    const auto b = estimate_outage_capacity(config, 0.01, 64000, 77, 4);
    CHECK(a.ec.capacity == b.ec.capacity);
    CHECK(a.capacity_stderr == b.capacity_stderr);
    CHECK(a.capacity_stderr > 0.0);
    CHECK(a.capacity_stderr < 0.05);
    // the estimate should sit near the closed-form-free truth: compare against
    // a much larger independent run
    const auto big = estimate_outage_capacity(config, 0.01, 512000, 78, 0);
    CHECK(std::abs(a.ec.capacity - big.ec.capacity) <=
          4.0 * (a.capacity_stderr + big.capacity_stderr));
}

} // TEST_SUITE
