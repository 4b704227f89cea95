#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "levyup/models.hpp"
#include "levyup/path_sim.hpp"
#include "levyup/stats.hpp"

using namespace levyup;

namespace {

ModelSpec bm(double mu, double sigma, std::string label = "bm") {
    return ModelSpec{BrownianMotion{mu, sigma}, std::move(label)};
}

ModelSpec cauchy() { return ModelSpec{StableProcess{1.0, 0.0, 1.0}, "cauchy"}; }

ModelSpec sp_cp(double drift, double rate, JumpLaw jumps) {
    return ModelSpec{SpectrallyPositiveCp{drift, rate, std::move(jumps)}, "sp_cp"};
}

std::vector<double> draw_increments(const ModelSpec& spec, double dt, long n, std::uint64_t seed) {
    Rng rng(seed, "increments");
    std::vector<double> xs(static_cast<std::size_t>(n));
    const auto sampler = make_step_sampler(spec, dt);
    std::visit(
        [&](const auto& s) {
            for (auto& x : xs) x = s(rng);
        },
        sampler);
    return xs;
}

}  // namespace

TEST_CASE("validation rejects out-of-range parameters") {
    REQUIRE_THROWS_AS(validate(ModelSpec{StableProcess{0.8, 1.0, 1.0}, "bad"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(validate(ModelSpec{StableProcess{1.0, -1.0, 1.0}, "bad"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(validate(ModelSpec{StableProcess{2.5, 0.0, 1.0}, "bad"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(validate(ModelSpec{SpectrallyPositiveCp{0.5, 1.0, ExponentialJump{1.0}}, "bad"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(validate(ModelSpec{BrownianMotion{0.0, 0.0}, "bad"}), std::invalid_argument);
    REQUIRE_NOTHROW(validate(ModelSpec{StableProcess{1.5, -1.0, 1.0}, "sn_stable"}));
    REQUIRE_NOTHROW(validate(ModelSpec{StableProcess{2.0, 1.0, 1.0}, "bm_as_stable"}));
}

TEST_CASE("classification: Brownian motion") {
    const auto f = classify(bm(0.0, 1.0));
    REQUIRE(f.regular_upwards);
    REQUIRE(f.regular_downwards);
    REQUIRE(f.creeps_upwards);
    REQUIRE_FALSE(f.drifts_to_minus_infinity);
    REQUIRE(f.oscillates_or_drifts_up);

    REQUIRE(classify(bm(-1.0, 1.0)).drifts_to_minus_infinity);
    REQUIRE_FALSE(classify(bm(-1.0, 1.0)).oscillates_or_drifts_up);
}

TEST_CASE("classification: spectrally positive compound Poisson with drift") {
    const auto spec = sp_cp(-0.5, 1.0, ExponentialJump{1.0});
    const auto f = classify(spec);
    REQUIRE_FALSE(f.regular_upwards);
    REQUIRE(f.regular_downwards);
    REQUIRE_FALSE(f.creeps_upwards);
    REQUIRE_FALSE(f.drifts_to_minus_infinity);  // E X_1 = 0.5 > 0
    REQUIRE(classify(sp_cp(-2.0, 1.0, ExponentialJump{1.0})).drifts_to_minus_infinity);

    // simulation cross-check of irregularity upwards: starting from 0, the
    // probability of any positive grid value by time delta vanishes as
    // delta -> 0 (upward moves need a jump).
    auto upcross_prob = [&](double delta, std::uint64_t seed) {
        Rng rng(seed, "upcross");
        const double dt = delta / 20.0;
        long hits = 0;
        const long n = 4000;
        for (long i = 0; i < n; ++i) {
            const auto path = simulate_path(spec, 0.0, dt, delta, rng);
            bool up = false;
            for (std::size_t k = 1; k < path.values.size(); ++k)
                if (path.values[k] > 0.0) up = true;
            if (up) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(n);
    };
    const double p_coarse = upcross_prob(0.02, 11);
    const double p_fine = upcross_prob(0.002, 12);
    REQUIRE(p_coarse < 0.05);
    REQUIRE(p_fine < p_coarse + 0.01);
}

TEST_CASE("classification: symmetric Cauchy and spectrally negative stable") {
    const auto f = classify(cauchy());
    REQUIRE(f.regular_upwards);
    REQUIRE(f.regular_downwards);
    REQUIRE_FALSE(f.creeps_upwards);
    REQUIRE(f.oscillates_or_drifts_up);

    REQUIRE(classify(ModelSpec{StableProcess{1.5, -1.0, 1.0}, "s"}).creeps_upwards);
    REQUIRE_FALSE(classify(ModelSpec{StableProcess{1.5, 0.5, 1.0}, "s"}).creeps_upwards);
    REQUIRE(classify(ModelSpec{SpectrallyNegativeBmCp{0.0, 1.0, 1.0, ExponentialJump{2.0}}, "s"})
                .creeps_upwards);
}

TEST_CASE("deterministic drift increment") {
    Rng rng(7, "drift");
    const double inc = sample_increment(bm(2.0, 0.0), 0.5, rng);
    REQUIRE(inc == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("stable(2, beta, s) increments match BrownianWithDrift(0, sqrt(2) s)") {
    const double dt = 0.3, s = 0.7;
    auto a = draw_increments(ModelSpec{StableProcess{2.0, 0.4, s}, "st2"}, dt, 20000, 21);
    auto b = draw_increments(bm(0.0, std::sqrt(2.0) * s), dt, 20000, 22);
    const double d =
        ks_statistic_two_sample(EmpiricalDistribution{a, {}}, EmpiricalDistribution{b, {}});
    REQUIRE(d < ks_two_sample_critical(0.01, 20000, 20000));
}

TEST_CASE("compound Poisson increment mean matches rate * jump mean + drift") {
    const auto spec = sp_cp(-1.0, 1.0, ExponentialJump{1.0});  // E X_1 = 0
    const double dt = 0.25;
    const auto xs = draw_increments(spec, dt, 400000, 23);
    const auto ms = mean_stderr(xs);
    REQUIRE(std::abs(ms.mean - 0.0) < 3.0 * ms.se);
}

TEST_CASE("increment additivity across dt halving") {
    const double dt = 0.2;
    const long n = 20000;
    std::vector<ModelSpec> specs{
        bm(0.3, 1.2),
        cauchy(),
        ModelSpec{StableProcess{1.0, 0.5, 0.8}, "skew_cauchy"},
        ModelSpec{StableProcess{1.6, 0.3, 1.0}, "stable16"},
        sp_cp(-0.5, 1.0, UniformJump{1.0}),
        ModelSpec{SpectrallyNegativeBmCp{0.1, 0.8, 0.5, ExponentialJump{1.0}}, "sn"},
    };
    for (const auto& spec : specs) {
        auto whole = draw_increments(spec, dt, n, 31);
        auto halves = draw_increments(spec, dt / 2.0, 2 * n, 32);
        std::vector<double> sums(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            sums[static_cast<std::size_t>(i)] = halves[static_cast<std::size_t>(2 * i)] +
                                                halves[static_cast<std::size_t>(2 * i + 1)];
        const double d = ks_statistic_two_sample(EmpiricalDistribution{whole, {}},
                                                 EmpiricalDistribution{sums, {}});
        INFO(spec.label);
        REQUIRE(d < ks_two_sample_critical(0.01, n, n));
    }
}

TEST_CASE("jump sign constraints") {
    Rng rng(8, "jumps");
    const JumpLaw laws[] = {ExponentialJump{2.0}, UniformJump{3.0}, FixedJump{0.5}};
    for (const auto& law : laws)
        for (int i = 0; i < 1000000 / 3; ++i) REQUIRE(sample_jump(law, rng) > 0.0);
}

TEST_CASE("size-biased jump laws") {
    Rng rng(9, "sized");
    SECTION("exponential becomes Gamma(2, rate)") {
        std::vector<double> xs(20000);
        for (auto& x : xs) x = sample_jump_size_biased(ExponentialJump{1.0}, rng);
        auto cdf = [](double x) { return 1.0 - std::exp(-x) * (1.0 + x); };
        REQUIRE(ks_statistic_one_sample(xs, cdf) < ks_one_sample_critical(0.01, 20000.0));
    }
    SECTION("uniform becomes density 2x/b^2") {
        std::vector<double> xs(20000);
        for (auto& x : xs) x = sample_jump_size_biased(UniformJump{1.0}, rng);
        auto cdf = [](double x) { return x <= 0 ? 0.0 : (x >= 1.0 ? 1.0 : x * x); };
        REQUIRE(ks_statistic_one_sample(xs, cdf) < ks_one_sample_critical(0.01, 20000.0));
    }
    SECTION("point mass stays put") {
        for (int i = 0; i < 100; ++i)
            REQUIRE(sample_jump_size_biased(FixedJump{0.7}, rng) == Catch::Approx(0.7));
    }
}
