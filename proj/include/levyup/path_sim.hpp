#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <variant>

#include "levyup/grid_path.hpp"
#include "levyup/models.hpp"
#include "levyup/rng.hpp"

namespace levyup {

inline constexpr std::size_t kDefaultStepCap = 400'000'000;

inline std::size_t steps_for_horizon(double dt, double horizon, std::size_t cap = kDefaultStepCap) {
    if (!(dt > 0.0) || !(horizon >= dt)) throw std::invalid_argument("need dt > 0 and horizon >= dt");
    const double n = std::floor(horizon / dt + 1e-9);
    if (n > static_cast<double>(cap)) throw std::length_error("path length exceeds step cap");
    return static_cast<std::size_t>(n);
}

// Grid skeleton with exact increments; length floor(horizon/dt)+1.
inline GridPath simulate_path(const ModelSpec& spec, double x0, double dt, double horizon, Rng& rng,
                              std::size_t cap = kDefaultStepCap) {
    const std::size_t n_steps = steps_for_horizon(dt, horizon, cap);
    GridPath path;
    path.dt = dt;
    path.label = spec.label;
    path.values.resize(n_steps + 1);
    path.values[0] = x0;
    auto sampler = make_step_sampler(spec, dt);
    std::visit(
        [&](const auto& step) {
            double x = x0;
            for (std::size_t k = 1; k <= n_steps; ++k) {
                x += step(rng);
                path.values[k] = x;
            }
        },
        sampler);
    return path;
}

// Streaming skeleton walk: calls visit(k, x) for k = 1..n_steps with the value
// at epoch k; stops early when visit returns false. Returns the last epoch
// reached. Used by the estimators so long paths never materialize.
template <typename Visit>
std::size_t walk_skeleton(const StepSampler& sampler, double x0, std::size_t n_steps, Rng& rng,
                          Visit&& visit) {
    return std::visit(
        [&](const auto& step) -> std::size_t {
            double x = x0;
            for (std::size_t k = 1; k <= n_steps; ++k) {
                x += step(rng);
                if (!visit(k, x)) return k;
            }
            return n_steps;
        },
        sampler);
}

}  // namespace levyup
