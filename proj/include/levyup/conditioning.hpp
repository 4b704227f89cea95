#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "levyup/grid_path.hpp"
#include "levyup/harmonic.hpp"
#include "levyup/models.hpp"
#include "levyup/parallel.hpp"
#include "levyup/path_sim.hpp"
#include "levyup/rng.hpp"

namespace levyup {

struct ConditionedSampleConfig {
    double x0 = 1.0;
    double epsilon = 0.01;  // clock rate: conditioning window is e/epsilon
    double dt = 1e-3;
    double horizon = 50.0;  // returned window; attempts with clock < horizon are rejected
    long max_rejections = 4'000'000;
    std::uint64_t seed = 1;
    std::string tag = "cond";
};

struct ConditionedSample {
    GridPath path;  // truncated to [0, horizon]
    double clock = 0.0;
    long attempts = 0;
};

struct RejectionExhausted : std::runtime_error {
    RejectionExhausted(long attempts_, double rate)
        : std::runtime_error("rejection sampler exhausted after " + std::to_string(attempts_) +
                             " attempts (acceptance rate " + std::to_string(rate) + ")"),
          attempts(attempts_),
          acceptance_rate(rate) {}
    long attempts;
    double acceptance_rate;
};

inline void validate_start_point(const ModelSpec& spec, double x0) {
    if (x0 < 0.0) throw std::invalid_argument("x0 must be >= 0");
    if (x0 == 0.0 && classify(spec).regular_downwards)
        throw std::invalid_argument(
            "x0 = 0 is only allowed when 0 is not regular downwards");
}

// One draw approximating P^up_{x0} on [0, horizon]: draw the exponential
// clock T = e/epsilon, reject unless T >= horizon, simulate the skeleton and
// accept when every grid value on [0, T] is positive. This is the
// Proposition-1 event {Lambda, horizon < e/eps | X > 0 on [0, e/eps]}.
inline ConditionedSample sample_conditioned_rejection(const ModelSpec& spec,
                                                      const ConditionedSampleConfig& cfg,
                                                      Rng& rng) {
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    validate_start_point(spec, cfg.x0);
    const std::size_t keep_steps = steps_for_horizon(cfg.dt, cfg.horizon);
    const auto sampler = make_step_sampler(spec, cfg.dt);

    std::vector<double> kept(keep_steps + 1);
    for (long attempt = 1; attempt <= cfg.max_rejections; ++attempt) {
        const double clock = rng.exponential() / cfg.epsilon;
        if (clock < cfg.horizon) continue;
        const std::size_t clock_steps = static_cast<std::size_t>(std::floor(clock / cfg.dt));
        kept[0] = cfg.x0;
        bool alive = true;
        walk_skeleton(sampler, cfg.x0, clock_steps, rng, [&](std::size_t k, double v) {
            if (v <= 0.0) {
                alive = false;
                return false;
            }
            if (k <= keep_steps) kept[k] = v;
            return true;
        });
        if (!alive) continue;
        ConditionedSample out;
        out.path.dt = cfg.dt;
        out.path.label = spec.label;
        out.path.values = kept;
        out.clock = clock;
        out.attempts = attempt;
        return out;
    }
    throw RejectionExhausted(cfg.max_rejections, 0.0);
}

// Deterministic bulk driver: sample i uses the stream (seed, tag, i), so the
// collection is reproducible for any worker count. Extract maps an accepted
// sample to a small summary; full paths are not retained.
template <typename T, typename Extract>
std::vector<T> condition_sample_map(const ModelSpec& spec, const ConditionedSampleConfig& cfg,
                                    long n_samples, Extract&& extract, long* total_attempts = nullptr,
                                    int workers = 0) {
    std::vector<T> results(static_cast<std::size_t>(n_samples));
    auto attempts = run_replicates<long>(
        n_samples, 0L,
        [&](long rep, long& a) {
            Rng rng(cfg.seed, cfg.tag, static_cast<std::uint64_t>(rep));
            const ConditionedSample s = sample_conditioned_rejection(spec, cfg, rng);
            results[static_cast<std::size_t>(rep)] = extract(s);
            a += s.attempts;
        },
        [](long& l, long&& r) { l += r; }, workers);
    if (total_attempts) *total_attempts = attempts;
    return results;
}

// ---------------------------------------------------------------------------
// h-transform weight of Eq. (5): h(X_t)/h(x0) while the path has stayed
// positive up to t, else 0 (killed).
// ---------------------------------------------------------------------------

inline double htransform_weight(const GridPath& path, const HarmonicEstimate& h_est, double x0,
                                double t) {
    if (!(x0 > 0.0)) throw std::invalid_argument("x0 must be > 0");
    const auto k = static_cast<std::size_t>(std::llround(t / path.dt));
    if (k >= path.values.size()) throw std::invalid_argument("path does not reach t");
    if (path.killed_at && *path.killed_at <= k) return 0.0;
    for (std::size_t j = 1; j <= k; ++j)
        if (path.values[j] <= 0.0) return 0.0;
    return h_est.value_at(path.values[k]) / h_est.value_at(x0);
}

// ---------------------------------------------------------------------------
// Path decomposition at the minimum (Theorem 2).
// ---------------------------------------------------------------------------

struct DecompositionRecord {
    GridPath pre_min;   // (X_t, 0 <= t < m); empty when the minimum is at 0
    GridPath post_min;  // (X_{m+t} - U, 0 <= t < zeta - m); starts at 0
    double minimum = 0.0;   // U
    double min_time = 0.0;  // m
};

inline DecompositionRecord decompose_at_minimum(const GridPath& path) {
    require_nonempty(path);
    const std::size_t m = argmin_time(path);
    const std::size_t n = path.living();
    DecompositionRecord rec;
    rec.minimum = path.values[m];
    rec.min_time = static_cast<double>(m) * path.dt;
    rec.pre_min.dt = rec.post_min.dt = path.dt;
    rec.pre_min.label = rec.post_min.label = path.label;
    rec.pre_min.values.assign(path.values.begin(), path.values.begin() + static_cast<std::ptrdiff_t>(m));
    rec.post_min.values.resize(n - m);
    for (std::size_t k = m; k < n; ++k) rec.post_min.values[k - m] = path.values[k] - rec.minimum;
    return rec;
}

// Upper tail of the minimum law, Eq. (6): P^up_x(U >= y) = h(x-y)/h(x) for
// 0 <= y <= x, and 0 beyond x.
inline double minimum_law_survival(const HarmonicEstimate& h_est, double x, double y) {
    if (!(x > 0.0)) throw std::invalid_argument("x must be > 0");
    if (y <= 0.0) return 1.0;
    if (y > x) return 0.0;
    return h_est.value_at(x - y) / h_est.value_at(x);
}

// ---------------------------------------------------------------------------
// Entrance law of Eq. (7): when the process has no negative jumps and 0 is
// not regular upwards, P^up(X_0 in dx) = x pi(dx) / int u pi(du) -- the
// size-biased jump law. Valid here exactly for the spectrally positive
// family.
// ---------------------------------------------------------------------------

inline double sample_entrance_law(const ModelSpec& spec, Rng& rng) {
    const auto* cp = std::get_if<SpectrallyPositiveCp>(&spec.family);
    if (!cp)
        throw std::invalid_argument(
            "entrance law requires the spectrally positive bounded-variation family");
    return sample_jump_size_biased(cp->jumps, rng);
}

// ---------------------------------------------------------------------------
// Last-zero construction of P^up started at 0: simulate to t_large, locate
// the last zero g of the reflected process, return the reflected segment
// after g. Resamples when the segment is empty or shorter than min_length.
// ---------------------------------------------------------------------------

struct LimitConstructionConfig {
    double t_large = 100.0;
    double dt = 1e-3;
    double min_length = 0.0;  // required segment duration
    int max_attempts = 64;
    std::uint64_t seed = 1;
    std::string tag = "limit";
};

inline GridPath sample_post_min_limit_construction(const ModelSpec& spec,
                                                   const LimitConstructionConfig& cfg, Rng& rng) {
    if (classify(spec).drifts_to_minus_infinity)
        throw std::invalid_argument("limit construction requires no drift to -infinity");
    const std::size_t n_steps = steps_for_horizon(cfg.dt, cfg.t_large);
    const auto sampler = make_step_sampler(spec, cfg.dt);
    const std::size_t min_keep = static_cast<std::size_t>(std::ceil(cfg.min_length / cfg.dt));

    std::vector<double> values(n_steps + 1);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        values[0] = 0.0;
        double runmin = 0.0;
        std::size_t last_zero = 0;
        walk_skeleton(sampler, 0.0, n_steps, rng, [&](std::size_t k, double v) {
            values[k] = v;
            if (v <= runmin) {
                runmin = v;
                last_zero = k;
            }
            return true;
        });
        if (n_steps - last_zero < std::max<std::size_t>(min_keep, 1)) continue;  // resample
        GridPath seg;
        seg.dt = cfg.dt;
        seg.label = spec.label;
        seg.values.resize(n_steps - last_zero + 1);
        const double base = values[last_zero];
        for (std::size_t k = last_zero; k <= n_steps; ++k) seg.values[k - last_zero] = values[k] - base;
        return seg;
    }
    throw std::runtime_error("limit construction: no usable segment after max_attempts");
}

template <typename T, typename Extract>
std::vector<T> limit_construction_map(const ModelSpec& spec, const LimitConstructionConfig& cfg,
                                      long n_samples, Extract&& extract, int workers = 0) {
    std::vector<T> results(static_cast<std::size_t>(n_samples));
    run_replicates<int>(
        n_samples, 0,
        [&](long rep, int&) {
            Rng rng(cfg.seed, cfg.tag, static_cast<std::uint64_t>(rep));
            const GridPath seg = sample_post_min_limit_construction(spec, cfg, rng);
            results[static_cast<std::size_t>(rep)] = extract(seg);
        },
        [](int&, int&&) {}, workers);
    return results;
}

}  // namespace levyup
