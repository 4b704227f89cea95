#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "levyup/rng.hpp"
#include "levyup/stats.hpp"

using namespace levyup;

TEST_CASE("ks critical coefficient") {
    REQUIRE(ks_critical_coefficient(0.01) == Catch::Approx(1.6276).margin(1e-3));
    REQUIRE(ks_critical_coefficient(0.05) == Catch::Approx(1.3581).margin(1e-3));
}

TEST_CASE("identical samples give statistic zero") {
    EmpiricalDistribution a{{1.0, 2.0, 3.0}, {}};
    REQUIRE(ks_statistic_two_sample(a, a) == 0.0);
}

TEST_CASE("same-law uniforms pass at 1%") {
    Rng rng(11, "ks_uniform");
    std::vector<double> a(10000), b(10000);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    const double d =
        ks_statistic_two_sample(EmpiricalDistribution{a, {}}, EmpiricalDistribution{b, {}});
    REQUIRE(d < ks_two_sample_critical(0.01, 10000, 10000));
}

TEST_CASE("shifted uniforms fail decisively") {
    Rng rng(2, "ks_shift");
    std::vector<double> a(10000), b(10000);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = 0.2 + rng.uniform();
    const double d =
        ks_statistic_two_sample(EmpiricalDistribution{a, {}}, EmpiricalDistribution{b, {}});
    REQUIRE(d > 0.15);  // analytic distance is 0.2
    REQUIRE(d > ks_two_sample_critical(0.01, 10000, 10000));
}

TEST_CASE("one-sample statistic against the true cdf") {
    Rng rng(3, "ks_one");
    std::vector<double> xs(20000);
    for (auto& x : xs) x = rng.uniform();
    const double d = ks_statistic_one_sample(xs, [](double x) { return x; });
    REQUIRE(d < ks_one_sample_critical(0.01, 20000.0));
}

TEST_CASE("weighted ecdf reproduces a change of measure") {
    // X ~ U(0,1) weighted by 2x is the law with cdf x^2, sampled directly as
    // sqrt(U).
    Rng rng(4, "ks_weighted");
    const std::size_t n = 20000;
    EmpiricalDistribution weighted;
    weighted.samples.resize(n);
    weighted.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        weighted.samples[i] = rng.uniform();
        weighted.weights[i] = 2.0 * weighted.samples[i];
    }
    EmpiricalDistribution direct;
    direct.samples.resize(n);
    for (auto& x : direct.samples) x = std::sqrt(rng.uniform());
    const double d = ks_statistic_two_sample(weighted, direct);
    REQUIRE(d < ks_two_sample_critical(0.01, weighted.effective_n(), direct.effective_n()));
    REQUIRE(weighted.effective_n() < static_cast<double>(n));
}

TEST_CASE("permutation option calibrates on small same-law samples") {
    Rng rng(5, "ks_perm");
    std::vector<double> a(40), b(40);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    Rng prng(6, "perm");
    const double p = ks_two_sample_permutation_pvalue(a, b, 400, prng);
    REQUIRE(p > 0.01);
}

TEST_CASE("spearman trend test") {
    const std::vector<double> perfect{4.0, 3.0, 2.0, 1.0};
    REQUIRE(spearman_decreasing_pvalue(perfect) == Catch::Approx(1.0 / 24.0));
    const std::vector<double> increasing{1.0, 2.0, 3.0, 4.0};
    REQUIRE(spearman_decreasing_pvalue(increasing) == Catch::Approx(1.0));
    const std::vector<double> near{5.0, 4.0, 4.5, 1.0, 0.5};
    REQUIRE(spearman_decreasing_pvalue(near) < 0.1);
}

TEST_CASE("distance correlation detects dependence and respects independence") {
    Rng rng(7, "dcor");
    const std::size_t n = 400;
    std::vector<double> x(n), y_indep(n), y_dep(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y_indep[i] = rng.normal();
        y_dep[i] = x[i] * x[i] + 0.1 * rng.normal();  // nonlinear dependence
    }
    Rng prng(8, "dcor_perm");
    const auto indep = dcor_permutation_test(x, y_indep, 199, 0.01, prng);
    REQUIRE(indep.pvalue > 0.01);
    REQUIRE(indep.statistic <= indep.critical);
    const auto dep = dcor_permutation_test(x, y_dep, 199, 0.01, prng);
    REQUIRE(dep.pvalue <= 0.01);
    REQUIRE(dep.statistic > dep.critical);
}

TEST_CASE("empirical distribution validation") {
    EmpiricalDistribution bad{{1.0, 2.0}, {1.0}};
    REQUIRE_THROWS_AS(bad.check(), std::invalid_argument);
    EmpiricalDistribution neg{{1.0, 2.0}, {1.0, -1.0}};
    REQUIRE_THROWS_AS(neg.check(), std::invalid_argument);
    EmpiricalDistribution zero{{1.0, 2.0}, {0.0, 0.0}};
    REQUIRE_THROWS_AS(zero.check(), std::invalid_argument);
}
