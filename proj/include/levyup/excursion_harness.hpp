#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyup/models.hpp"
#include "levyup/parallel.hpp"
#include "levyup/path_sim.hpp"
#include "levyup/rng.hpp"

namespace levyup {

// Skeleton estimator of the excursion measure of X - inf X away from 0.
// Counting local time = new-minimum epochs (records, epoch 0 included), so
// n_hat(A) = (#excursions with property A) / (#record epochs) is the measure
// in the same skeleton normalization as the ladder estimate of h.
//
// Records are only counted while they start inside [0, T - margin]; an
// excursion's alive-at-t value and its height-crossing events are observable
// within the margin, which keeps the estimates free of end-censoring bias.
struct ExcursionHarnessConfig {
    double dt = 2.5e-4;
    long n_paths = 256;
    long steps_per_path = 500'000;
    std::vector<double> alive_times;    // ages at which excursion values are sampled
    std::vector<double> height_levels;  // levels x for n(H > x)
    std::uint64_t seed = 1;
    std::string tag = "excursions";
    int workers = 0;
};

struct ExcursionHarnessResult {
    long record_epochs = 0;      // denominator of every excursion-measure estimate
    long nonempty_excursions = 0;
    std::vector<std::vector<double>> alive_values;  // one vector per alive time
    std::vector<long> height_exceed;                // per level: #excursions with observed H > x
    double dt = 0.0;

    double measure_height_tail(std::size_t level_idx) const {
        return static_cast<double>(height_exceed[level_idx]) / static_cast<double>(record_epochs);
    }
};

// Picks steps_per_path so the harness yields roughly `target` nonempty
// excursions: a continuous symmetric-ish walk of k steps has about 1.128
// sqrt(k) record epochs, half of which open a nonempty excursion.
inline long steps_for_excursion_target(long target, long n_paths) {
    const double records_needed = 2.0 * static_cast<double>(target);
    const double per_path = records_needed / static_cast<double>(n_paths);
    const double k = std::pow(per_path / 1.128, 2.0);
    return std::max<long>(1000, static_cast<long>(std::ceil(k)));
}

inline ExcursionHarnessResult run_excursion_harness(const ModelSpec& spec,
                                                    const ExcursionHarnessConfig& cfg) {
    if (!std::is_sorted(cfg.alive_times.begin(), cfg.alive_times.end()))
        throw std::invalid_argument("alive_times must be sorted");
    if (!std::is_sorted(cfg.height_levels.begin(), cfg.height_levels.end()))
        throw std::invalid_argument("height_levels must be sorted");
    validate(spec);

    const std::size_t n_steps = static_cast<std::size_t>(cfg.steps_per_path);
    std::vector<std::size_t> age_steps;
    age_steps.reserve(cfg.alive_times.size());
    for (double t : cfg.alive_times) {
        const auto k = static_cast<std::size_t>(std::llround(t / cfg.dt));
        if (k == 0 || k >= n_steps) throw std::invalid_argument("alive time outside path span");
        age_steps.push_back(k);
    }
    const std::size_t margin = age_steps.empty() ? 1 : age_steps.back() + 1;
    if (margin >= n_steps) throw std::invalid_argument("paths shorter than the margin");
    const std::size_t window_end = n_steps - margin;

    using Acc = ExcursionHarnessResult;
    Acc init;
    init.alive_values.resize(cfg.alive_times.size());
    init.height_exceed.assign(cfg.height_levels.size(), 0);
    init.dt = cfg.dt;

    const auto sampler = make_step_sampler(spec, cfg.dt);
    auto acc = run_replicates<Acc>(
        cfg.n_paths, init,
        [&](long rep, Acc& a) {
            Rng rng(cfg.seed, cfg.tag, static_cast<std::uint64_t>(rep));
            double runmin = 0.0;
            std::size_t record_idx = 0;     // start of the open span
            double record_level = 0.0;      // path value at the record
            bool record_in_window = true;   // epoch 0
            double span_max = 0.0;          // max reflected value since the record
            std::size_t next_age = 0;
            a.record_epochs += 1;           // epoch 0

            auto close_span = [&](std::size_t end_idx) {
                if (!record_in_window) return;
                if (end_idx > record_idx + 1) {
                    a.nonempty_excursions += 1;
                    for (std::size_t j = 0; j < cfg.height_levels.size(); ++j) {
                        if (span_max > cfg.height_levels[j]) a.height_exceed[j] += 1;
                        else break;  // levels ascending
                    }
                }
            };

            walk_skeleton(sampler, 0.0, n_steps, rng, [&](std::size_t k, double v) {
                if (v <= runmin) {
                    close_span(k);
                    runmin = v;
                    record_idx = k;
                    record_level = v;
                    span_max = 0.0;
                    next_age = 0;
                    record_in_window = k <= window_end;
                    if (record_in_window) a.record_epochs += 1;
                    return true;
                }
                const double r = v - record_level;
                span_max = std::max(span_max, r);
                if (record_in_window) {
                    while (next_age < age_steps.size() && k - record_idx == age_steps[next_age]) {
                        a.alive_values[next_age].push_back(r);
                        ++next_age;
                    }
                }
                return true;
            });
            close_span(n_steps + 1);  // final (possibly censored) span
        },
        [](Acc& l, Acc&& r) {
            l.record_epochs += r.record_epochs;
            l.nonempty_excursions += r.nonempty_excursions;
            for (std::size_t j = 0; j < l.alive_values.size(); ++j) {
                auto& dst = l.alive_values[j];
                auto& src = r.alive_values[j];
                dst.insert(dst.end(), src.begin(), src.end());
            }
            for (std::size_t j = 0; j < l.height_exceed.size(); ++j)
                l.height_exceed[j] += r.height_exceed[j];
        },
        cfg.workers);
    return acc;
}

}  // namespace levyup
