#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "levyup/rng.hpp"
#include "levyup/stats.hpp"

using namespace levyup;

TEST_CASE("seed derivation is deterministic and stream-separating") {
    REQUIRE(derive_seed(42, "a", 0) == derive_seed(42, "a", 0));
    REQUIRE(derive_seed(42, "a", 0) != derive_seed(42, "a", 1));
    REQUIRE(derive_seed(42, "a", 0) != derive_seed(42, "b", 0));
    REQUIRE(derive_seed(42, "a", 0) != derive_seed(43, "a", 0));

    Rng r1(42, "stream", 7);
    Rng r2(42, "stream", 7);
    for (int i = 0; i < 100; ++i) REQUIRE(r1.next_u64() == r2.next_u64());
}

TEST_CASE("uniform draws live in (0,1)") {
    Rng rng(1, "uniform");
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("normal sampler moments") {
    Rng rng(2, "normal");
    const long n = 400000;
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("poisson sampler mean at small intensity") {
    Rng rng(3, "poisson");
    const long n = 500000;
    const double mean = 0.02;
    long total = 0;
    for (long i = 0; i < n; ++i) total += rng.poisson(mean);
    const double m_hat = static_cast<double>(total) / static_cast<double>(n);
    REQUIRE(std::abs(m_hat - mean) < 4.0 * std::sqrt(mean / static_cast<double>(n)));
}

TEST_CASE("stable alpha=2 is Normal(0,2)") {
    Rng rng(4, "stable2");
    std::vector<double> xs(20000);
    for (auto& x : xs) x = rng.stable(2.0, 0.3);
    auto cdf = [](double x) { return 0.5 * std::erfc(-x / 2.0); };  // Normal(0, 2)
    const double d = ks_statistic_one_sample(xs, cdf);
    REQUIRE(d < ks_one_sample_critical(0.01, 20000.0));
}

TEST_CASE("stable alpha=1 beta=0 is standard Cauchy") {
    Rng rng(5, "cauchy");
    std::vector<double> xs(20000);
    for (auto& x : xs) x = rng.stable(1.0, 0.0);
    auto cdf = [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; };
    const double d = ks_statistic_one_sample(xs, cdf);
    REQUIRE(d < ks_one_sample_critical(0.01, 20000.0));
}

TEST_CASE("one-sided stable alpha<1 beta=1 is positive") {
    Rng rng(6, "positive_stable");
    for (int i = 0; i < 20000; ++i) REQUIRE(rng.stable(0.7, 1.0) > 0.0);
}
