#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "levyup/parallel.hpp"
#include "levyup/report.hpp"
#include "levyup/rng.hpp"
#include "levyup/stats.hpp"

namespace levyup {

// Null calibration: every statistical primitive, run on data it should
// accept, must pass at least 95% of the time at the 1% level. One outcome
// row per primitive.
struct CalibrationConfig {
    int n_seeds = 100;
    double alpha = 0.01;
    long n = 2000;        // sample size per synthetic data set
    int dcor_n = 300;     // distance correlation is O(n^2)
    std::uint64_t seed = 9001;
    int workers = 0;
};

struct CalibrationOutcome {
    std::string test_name;
    int passes = 0;
    int runs = 0;
    double pass_rate() const { return static_cast<double>(passes) / static_cast<double>(runs); }
};

inline std::vector<CalibrationOutcome> run_null_calibration(const CalibrationConfig& cfg) {
    struct Counts {
        int one_sample = 0, two_sample = 0, weighted = 0, permutation = 0, trend = 0, dcor = 0,
            zband = 0;
    };
    auto acc = run_replicates<Counts>(
        cfg.n_seeds, Counts{},
        [&](long rep, Counts& c) {
            Rng rng(cfg.seed, "calibration", static_cast<std::uint64_t>(rep));
            const std::size_t n = static_cast<std::size_t>(cfg.n);

            {  // one-sample KS on uniforms
                std::vector<double> xs(n);
                for (auto& x : xs) x = rng.uniform();
                const double d = ks_statistic_one_sample(xs, [](double x) { return x; });
                if (d < ks_one_sample_critical(cfg.alpha, static_cast<double>(n))) c.one_sample++;
            }
            {  // two-sample KS on same-law normals
                std::vector<double> a(n), b(n);
                for (auto& x : a) x = rng.normal();
                for (auto& x : b) x = rng.normal();
                const double d = ks_statistic_two_sample(EmpiricalDistribution{a, {}},
                                                         EmpiricalDistribution{b, {}});
                if (d < ks_two_sample_critical(cfg.alpha, static_cast<double>(n),
                                               static_cast<double>(n)))
                    c.two_sample++;
            }
            {  // weighted KS: U(0,1) weighted by 2x against sqrt(U)
                EmpiricalDistribution w;
                w.samples.resize(n);
                w.weights.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    w.samples[i] = rng.uniform();
                    w.weights[i] = 2.0 * w.samples[i];
                }
                EmpiricalDistribution d0;
                d0.samples.resize(n);
                for (auto& x : d0.samples) x = std::sqrt(rng.uniform());
                const double d = ks_statistic_two_sample(w, d0);
                if (d < ks_two_sample_critical(cfg.alpha, w.effective_n(), d0.effective_n()))
                    c.weighted++;
            }
            {  // small-n permutation KS
                std::vector<double> a(40), b(40);
                for (auto& x : a) x = rng.normal();
                for (auto& x : b) x = rng.normal();
                Rng prng(cfg.seed, "calib_perm", static_cast<std::uint64_t>(rep));
                if (ks_two_sample_permutation_pvalue(a, b, 200, prng) > cfg.alpha) c.permutation++;
            }
            {  // Spearman trend on genuinely decreasing data
                std::vector<double> d{0.04, 0.03, 0.02, 0.01};
                for (auto& x : d) x += 0.002 * rng.normal();
                if (spearman_decreasing_pvalue(d) <= 0.05) c.trend++;
            }
            {  // distance correlation on independent pairs
                std::vector<double> x(static_cast<std::size_t>(cfg.dcor_n)),
                    y(static_cast<std::size_t>(cfg.dcor_n));
                for (auto& v : x) v = rng.normal();
                for (auto& v : y) v = rng.normal();
                Rng prng(cfg.seed, "calib_dcor", static_cast<std::uint64_t>(rep));
                const auto r = dcor_permutation_test(x, y, 99, cfg.alpha, prng);
                if (r.pvalue > cfg.alpha) c.dcor++;
            }
            {  // 3-sigma containment band on a null mean
                std::vector<double> xs(n);
                for (auto& x : xs) x = rng.normal();
                const auto ms = mean_stderr(xs);
                if (std::abs(ms.mean) <= 3.0 * ms.se) c.zband++;
            }
        },
        [](Counts& l, Counts&& r) {
            l.one_sample += r.one_sample;
            l.two_sample += r.two_sample;
            l.weighted += r.weighted;
            l.permutation += r.permutation;
            l.trend += r.trend;
            l.dcor += r.dcor;
            l.zband += r.zband;
        },
        cfg.workers);

    std::vector<CalibrationOutcome> out;
    auto push = [&](std::string name, int passes) {
        out.push_back({std::move(name), passes, cfg.n_seeds});
    };
    push("ks_one_sample", acc.one_sample);
    push("ks_two_sample", acc.two_sample);
    push("ks_weighted", acc.weighted);
    push("ks_permutation", acc.permutation);
    push("spearman_trend", acc.trend);
    push("distance_correlation", acc.dcor);
    push("z_band", acc.zband);
    return out;
}

inline TestReport calibration_report(const CalibrationConfig& cfg) {
    const auto outcomes = run_null_calibration(cfg);
    double worst = 1.0;
    std::ostringstream notes;
    for (const auto& o : outcomes) {
        worst = std::min(worst, o.pass_rate());
        notes << o.test_name << "=" << o.pass_rate() << ' ';
    }
    // statistic <= critical form: worst failure rate against 5%
    return make_report("null_calibration", 1.0 - worst, 0.05,
                       static_cast<long>(cfg.n_seeds) * static_cast<long>(outcomes.size()),
                       {cfg.seed}, "synthetic", {{"alpha", cfg.alpha}, {"n", double(cfg.n)}},
                       notes.str());
}

}  // namespace levyup
