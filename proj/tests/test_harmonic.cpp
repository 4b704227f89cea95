#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "levyup/harmonic.hpp"

using namespace levyup;

namespace {
const ModelSpec kBm{BrownianMotion{0.0, 1.0}, "bm"};
const ModelSpec kBmDown{BrownianMotion{-1.0, 1.0}, "bm_down"};
const ModelSpec kCauchy{StableProcess{1.0, 0.0, 1.0}, "cauchy"};
const ModelSpec kSpCp{SpectrallyPositiveCp{-0.5, 1.0, ExponentialJump{1.0}}, "sp_cp"};
}  // namespace

TEST_CASE("closed forms") {
    REQUIRE(h_closed_form(kBm, 0.0) == 0.0);  // regular downwards
    REQUIRE(h_closed_form(kBm, 1.7) == 1.7);
    REQUIRE(*h_closed_form(kCauchy, 4.0) == Catch::Approx(2.0));  // x^{1/2}
    REQUIRE_FALSE(h_closed_form(kBmDown, 1.0).has_value());
    // symmetric-stable scaling h(2x)/h(x) = 2^{alpha/2}
    REQUIRE(*h_closed_form(kCauchy, 2.0) / *h_closed_form(kCauchy, 1.0) ==
            Catch::Approx(std::sqrt(2.0)));

    // spectrally positive: linear when E X_1 <= 0
    const ModelSpec osc{SpectrallyPositiveCp{-1.0, 1.0, ExponentialJump{1.0}}, "osc"};
    REQUIRE(*h_closed_form(osc, 3.0) == Catch::Approx(3.0));
    const ModelSpec down{SpectrallyPositiveCp{-2.0, 1.0, ExponentialJump{1.0}}, "down"};
    REQUIRE(*h_closed_form(down, 3.0) == Catch::Approx(3.0));
    // drift up: Cramer root for Exp(mu) jumps is rate/|d| - mu
    REQUIRE(cramer_descent_rate(SpectrallyPositiveCp{-0.5, 1.0, ExponentialJump{1.0}}) ==
            Catch::Approx(1.0).margin(1e-9));
    REQUIRE(*h_closed_form(kSpCp, 1.0) == Catch::Approx(1.0 - std::exp(-1.0)));
    REQUIRE(*h_closed_form(kSpCp, 1e-9) == Catch::Approx(1e-9).epsilon(1e-6));  // slope 1 at 0

    const auto est = closed_form_estimate(kBm, geometric_levels(-6, 3));
    REQUIRE(est.values.front() == 0.0);  // h(0) in {0,1} per regularity
    REQUIRE(est.method == HMethod::closed_form);
}

TEST_CASE("ladder estimate matches the drift-up spectrally positive closed form") {
    LadderConfig cfg;
    cfg.levels = {0.0, 0.5, 1.0, 2.0};
    cfg.dt = 2e-3;
    cfg.n_paths = 4000;
    cfg.horizon = 80.0;
    cfg.max_extensions = 1;
    cfg.seed = 14;
    cfg.tag = "h_spcp";
    const auto est = estimate_h_ladder(kSpCp, cfg);
    const double target = (1.0 - std::exp(-1.0)) / (1.0 - std::exp(-2.0));
    REQUIRE(est.value_at(1.0) / est.value_at(2.0) == Catch::Approx(target).epsilon(0.05));
}

TEST_CASE("interpolation forbids extrapolation") {
    const auto est = closed_form_estimate(kBm, {0.0, 1.0, 2.0});
    REQUIRE(est.value_at(1.5) == Catch::Approx(1.5));
    REQUIRE_THROWS_AS(est.value_at(2.5), std::out_of_range);
}

TEST_CASE("ladder estimate: skeleton normalization and Brownian ratios") {
    LadderConfig cfg;
    cfg.levels = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    cfg.dt = 4e-3;
    cfg.n_paths = 4000;
    cfg.horizon = 400.0;
    cfg.max_extensions = 0;
    cfg.seed = 5;
    const auto est = estimate_h_ladder(kBm, cfg);

    REQUIRE(est.values[0] == 1.0);  // only epoch 0 has running minimum >= 0
    REQUIRE(est.stderrs[0] == 0.0);

    // closed form h(x) = x up to the skeleton offset: ratio test cancels it
    const double ratio = est.value_at(2.0) / est.value_at(1.0);
    REQUIRE(ratio == Catch::Approx(2.0).epsilon(0.05));

    // monotone within 2 stderr
    for (std::size_t j = 1; j < est.levels.size(); ++j)
        REQUIRE(est.values[j] >= est.values[j - 1] - 2.0 * est.stderrs[j]);

    // h - h(0) subadditive: pairs (x, y) on the grid
    const double h0 = est.values[0];
    auto g = [&](double x) { return est.value_at(x) - h0; };
    auto se = [&](double x) { return est.stderr_at(x); };
    REQUIRE(g(1.5) <= g(1.0) + g(0.5) + 2.0 * (se(1.5) + se(1.0) + se(0.5)));
    REQUIRE(g(2.0) <= g(1.0) + g(1.0) + 2.0 * (se(2.0) + 2.0 * se(1.0)));
}

TEST_CASE("ladder estimate: symmetric Cauchy exponent") {
    LadderConfig cfg;
    cfg.levels = {0.0, 0.5, 1.0, 2.0};
    cfg.dt = 4e-3;
    cfg.n_paths = 3000;
    cfg.horizon = 400.0;
    cfg.max_extensions = 0;
    cfg.seed = 6;
    cfg.tag = "cauchy_h";
    const auto est = estimate_h_ladder(kCauchy, cfg);
    REQUIRE(est.value_at(1.0) / est.value_at(2.0) == Catch::Approx(std::sqrt(0.5)).epsilon(0.10));
}

TEST_CASE("exit-ratio estimator") {
    SECTION("identical start points give ratio 1") {
        ExitRatioConfig cfg;
        cfg.barrier = 15.0;
        cfg.dt = 5e-3;
        cfg.n_paths = 8000;
        cfg.seed = 7;
        const auto r = estimate_h_exit_ratio(kBm, 1.5, 1.5, cfg);
        REQUIRE_FALSE(r.degenerate);
        REQUIRE(std::abs(r.ratio - 1.0) <= 3.0 * r.se);
    }
    SECTION("gambler's ruin oracle for Brownian motion") {
        ExitRatioConfig cfg;
        cfg.barrier = 20.0;
        cfg.dt = 4e-3;
        cfg.n_paths = 10000;
        cfg.seed = 8;
        const auto r = estimate_h_exit_ratio(kBm, 1.0, 2.0, cfg);
        REQUIRE_FALSE(r.degenerate);
        REQUIRE(std::abs(r.ratio - 0.5) <= 3.0 * r.se);
        // monotonicity: x < y means ratio below 1
        REQUIRE(r.ratio <= 1.0 + 2.0 * r.se);
    }
    SECTION("validation") {
        ExitRatioConfig cfg;
        cfg.barrier = 5.0;
        REQUIRE_THROWS_AS(estimate_h_exit_ratio(kBm, 1.0, 2.0, cfg), std::invalid_argument);
        cfg.barrier = 40.0;
        REQUIRE_THROWS_AS(estimate_h_exit_ratio(kBmDown, 1.0, 2.0, cfg), std::invalid_argument);
    }
}

TEST_CASE("cross-estimator agreement on h(1)/h(2)") {
    LadderConfig lc;
    lc.levels = {0.0, 1.0, 2.0};
    lc.dt = 4e-3;
    lc.n_paths = 6000;
    lc.horizon = 900.0;
    lc.max_extensions = 0;
    lc.seed = 9;
    const auto lad = estimate_h_ladder(kBm, lc);
    const double lr = lad.value_at(1.0) / lad.value_at(2.0);
    const double lr_se = lr * std::sqrt(std::pow(lad.stderr_at(1.0) / lad.value_at(1.0), 2) +
                                        std::pow(lad.stderr_at(2.0) / lad.value_at(2.0), 2));

    ExitRatioConfig ec;
    ec.barrier = 20.0;
    ec.dt = 4e-3;
    ec.n_paths = 12000;
    ec.seed = 10;
    const auto ex = estimate_h_exit_ratio(kBm, 1.0, 2.0, ec);
    REQUIRE(std::abs(lr - ex.ratio) <= 3.0 * std::sqrt(lr_se * lr_se + ex.se * ex.se));
}

TEST_CASE("Lemma 1: invariant for oscillating, excessive for drifting down") {
    SECTION("t = 0 is exact") {
        const auto est = closed_form_estimate(kBm, {0.0, 1.0, 2.0});
        ExcessiveCheckConfig cfg;
        const auto rep = check_excessive_invariant(kBm, est, 1.0, 0.0, cfg);
        REQUIRE(rep.statistic == 0.0);
        REQUIRE(rep.passed);
    }
    SECTION("Brownian motion: equality within band") {
        const auto est = closed_form_estimate(kBm, geometric_levels(-6, 4));
        ExcessiveCheckConfig cfg;
        cfg.dt = 5e-4;
        cfg.n_paths = 20000;
        cfg.seed = 11;
        const auto rep = check_excessive_invariant(kBm, est, 1.0, 1.0, cfg);
        INFO(rep.notes);
        REQUIRE(rep.passed);
    }
    SECTION("downward drift: one-sided bound") {
        LadderConfig lc;
        lc.levels = geometric_levels(-4, 4);
        lc.dt = 2e-3;
        lc.n_paths = 20000;
        lc.horizon = 100.0;
        lc.seed = 12;
        lc.tag = "hdown";
        const auto est = estimate_h_ladder(kBmDown, lc);
        ExcessiveCheckConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = 20000;
        cfg.seed = 13;
        const auto rep = check_excessive_invariant(kBmDown, est, 1.0, 1.0, cfg);
        INFO(rep.notes);
        REQUIRE(rep.passed);
    }
}

TEST_CASE("harmonic csv round trip") {
    const auto est = closed_form_estimate(kBm, {0.0, 0.5, 1.0});
    const auto file = std::filesystem::temp_directory_path() / "levyup_h_test.csv";
    save_csv(est, file);
    const auto back = load_csv(file);
    REQUIRE(back.levels == est.levels);
    REQUIRE(back.values == est.values);
    REQUIRE(back.method == HMethod::closed_form);
    std::filesystem::remove(file);
}
