#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "levyup/rng.hpp"

namespace levyup {

// ---------------------------------------------------------------------------
// Jump laws for the compound Poisson parts. Values are magnitudes (> 0); the
// owning family decides the sign of the jump.
// ---------------------------------------------------------------------------

struct ExponentialJump {
    double rate = 1.0;  // mean 1/rate
};

struct UniformJump {
    double upper = 1.0;  // Uniform(0, upper)
};

struct FixedJump {
    double value = 1.0;  // point mass
};

using JumpLaw = std::variant<ExponentialJump, UniformJump, FixedJump>;

inline void validate(const JumpLaw& law) {
    std::visit(
        [](const auto& j) {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, ExponentialJump>) {
                if (!(j.rate > 0.0)) throw std::invalid_argument("exponential jump rate must be > 0");
            } else if constexpr (std::is_same_v<T, UniformJump>) {
                if (!(j.upper > 0.0)) throw std::invalid_argument("uniform jump upper bound must be > 0");
            } else {
                if (!(j.value > 0.0)) throw std::invalid_argument("fixed jump value must be > 0");
            }
        },
        law);
}

inline double jump_mean(const JumpLaw& law) {
    return std::visit(
        [](const auto& j) -> double {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, ExponentialJump>) return 1.0 / j.rate;
            else if constexpr (std::is_same_v<T, UniformJump>) return 0.5 * j.upper;
            else return j.value;
        },
        law);
}

inline double jump_laplace(const JumpLaw& law, double theta) {
    return std::visit(
        [&](const auto& j) -> double {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, ExponentialJump>) return j.rate / (j.rate + theta);
            else if constexpr (std::is_same_v<T, UniformJump>)
                return theta == 0.0 ? 1.0 : (1.0 - std::exp(-theta * j.upper)) / (theta * j.upper);
            else return std::exp(-theta * j.value);
        },
        law);
}

inline double sample_jump(const JumpLaw& law, Rng& rng) {
    return std::visit(
        [&](const auto& j) -> double {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, ExponentialJump>) return rng.exponential(j.rate);
            else if constexpr (std::is_same_v<T, UniformJump>) return j.upper * rng.uniform();
            else return j.value;
        },
        law);
}

// Draw from the size-biased law x P(dx) / E[jump].
inline double sample_jump_size_biased(const JumpLaw& law, Rng& rng) {
    return std::visit(
        [&](const auto& j) -> double {
            using T = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<T, ExponentialJump>) {
                // size-biased exponential = Gamma(2, rate)
                return (rng.exponential() + rng.exponential()) / j.rate;
            } else if constexpr (std::is_same_v<T, UniformJump>) {
                // density 2x/upper^2 on (0, upper)
                return j.upper * std::sqrt(rng.uniform());
            } else {
                return j.value;
            }
        },
        law);
}

// ---------------------------------------------------------------------------
// Model families
// ---------------------------------------------------------------------------

struct BrownianMotion {
    double drift = 0.0;
    double sigma = 1.0;
};

// Strictly stable in the 1-parameterization used by the Chambers-Mallows-Stuck
// sampler. alpha = 2 reduces to Brownian motion with variance 2*scale^2 per
// unit time; alpha = 1 carries the usual log-drift correction so increments
// stay exactly additive.
struct StableProcess {
    double alpha = 1.0;
    double beta = 0.0;
    double scale = 1.0;
};

// Negative drift plus positive compound Poisson jumps: bounded variation,
// irregular upwards, regular downwards.
struct SpectrallyPositiveCp {
    double drift = -1.0;  // must be < 0
    double rate = 1.0;
    JumpLaw jumps = ExponentialJump{1.0};
};

// Brownian part plus negative compound Poisson jumps; no positive jumps.
struct SpectrallyNegativeBmCp {
    double drift = 0.0;
    double sigma = 1.0;  // must be > 0
    double rate = 0.0;
    JumpLaw jumps = ExponentialJump{1.0};
};

using ModelFamily =
    std::variant<BrownianMotion, StableProcess, SpectrallyPositiveCp, SpectrallyNegativeBmCp>;

struct ModelSpec {
    ModelFamily family;
    std::string label;
};

inline void validate(const ModelSpec& spec) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, BrownianMotion>) {
                if (m.sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
                if (m.sigma == 0.0 && m.drift == 0.0)
                    throw std::invalid_argument("degenerate constant process");
            } else if constexpr (std::is_same_v<T, StableProcess>) {
                if (!(m.alpha > 0.0) || m.alpha > 2.0)
                    throw std::invalid_argument("stable alpha must be in (0,2]");
                if (std::abs(m.beta) > 1.0)
                    throw std::invalid_argument("stable beta must be in [-1,1]");
                if (!(m.scale > 0.0)) throw std::invalid_argument("stable scale must be > 0");
                if (m.alpha <= 1.0 && std::abs(m.beta) == 1.0 && m.alpha != 2.0)
                    throw std::invalid_argument(
                        "one-sided stable with alpha <= 1 is outside the validated range");
            } else if constexpr (std::is_same_v<T, SpectrallyPositiveCp>) {
                if (!(m.drift < 0.0))
                    throw std::invalid_argument("spectrally positive family requires drift < 0");
                if (!(m.rate > 0.0)) throw std::invalid_argument("jump rate must be > 0");
                validate(m.jumps);
            } else {
                if (!(m.sigma > 0.0))
                    throw std::invalid_argument("spectrally negative family requires sigma > 0");
                if (m.rate < 0.0) throw std::invalid_argument("jump rate must be >= 0");
                if (m.rate > 0.0) validate(m.jumps);
            }
        },
        spec.family);
}

// E[X_1] when it exists; stable with alpha <= 1 has none.
inline std::optional<double> mean_at_unit_time(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> std::optional<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, BrownianMotion>) return m.drift;
            else if constexpr (std::is_same_v<T, StableProcess>) {
                if (m.alpha > 1.0 || m.alpha == 2.0) return 0.0;  // strictly stable, centered
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, SpectrallyPositiveCp>)
                return m.drift + m.rate * jump_mean(m.jumps);
            else
                return m.drift - m.rate * jump_mean(m.jumps);
        },
        spec.family);
}

// ---------------------------------------------------------------------------
// Regularity / creeping classification. Rule-based; the closed-form rules for
// the implemented families are:
//   - a Gaussian component makes 0 regular for both half-lines and the
//     process creep upwards;
//   - accepted stable parameters always give two-sided regularity (unbounded
//     variation for alpha >= 1, two-sided jumps otherwise), and creeping
//     upwards exactly when there are no positive jumps (alpha in (1,2],
//     beta = -1) or alpha = 2;
//   - bounded variation with negative drift is regular downwards, irregular
//     upwards, and cannot creep upwards;
//   - drift to -infinity iff E[X_1] < 0 (accepted stable models oscillate).
// ---------------------------------------------------------------------------

struct RegularityFlags {
    bool regular_upwards = false;
    bool regular_downwards = false;
    bool creeps_upwards = false;
    bool drifts_to_minus_infinity = false;
    bool oscillates_or_drifts_up = false;
};

inline RegularityFlags classify(const ModelSpec& spec) {
    validate(spec);
    RegularityFlags f;
    const auto mean = mean_at_unit_time(spec);
    f.drifts_to_minus_infinity = mean.has_value() && *mean < 0.0;
    f.oscillates_or_drifts_up = !f.drifts_to_minus_infinity;

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, BrownianMotion>) {
                if (m.sigma > 0.0) {
                    f.regular_upwards = f.regular_downwards = true;
                    f.creeps_upwards = true;
                } else {
                    // pure drift
                    f.regular_upwards = m.drift > 0.0;
                    f.regular_downwards = m.drift < 0.0;
                    f.creeps_upwards = m.drift > 0.0;
                }
            } else if constexpr (std::is_same_v<T, StableProcess>) {
                f.regular_upwards = f.regular_downwards = true;
                f.creeps_upwards = m.alpha == 2.0 || (m.alpha > 1.0 && m.beta == -1.0);
            } else if constexpr (std::is_same_v<T, SpectrallyPositiveCp>) {
                f.regular_upwards = false;
                f.regular_downwards = true;
                f.creeps_upwards = false;
            } else {
                f.regular_upwards = f.regular_downwards = true;
                f.creeps_upwards = true;
            }
        },
        spec.family);
    return f;
}

// ---------------------------------------------------------------------------
// Exact increment sampling. A StepSampler fixes (model, dt) once so the hot
// loops pay no per-step dispatch beyond one variant visit per path.
// ---------------------------------------------------------------------------

struct GaussianStep {
    double mean_dt;
    double sd_dt;
    double operator()(Rng& rng) const { return mean_dt + sd_dt * rng.normal(); }
};

struct StableStep {
    double alpha;
    double beta;
    double scale_dt;  // scale * dt^{1/alpha}
    double shift_dt;  // alpha = 1 log-drift correction, else 0
    double operator()(Rng& rng) const { return scale_dt * rng.stable(alpha, beta) + shift_dt; }
};

struct JumpDiffusionStep {
    double drift_dt;
    double sd_dt;       // 0 for the pure-jump family
    double rate_dt;
    double jump_sign;   // +1 or -1
    JumpLaw jumps;
    double operator()(Rng& rng) const {
        double x = drift_dt;
        if (sd_dt > 0.0) x += sd_dt * rng.normal();
        const long n = rng.poisson(rate_dt);
        for (long i = 0; i < n; ++i) x += jump_sign * sample_jump(jumps, rng);
        return x;
    }
};

using StepSampler = std::variant<GaussianStep, StableStep, JumpDiffusionStep>;

inline StepSampler make_step_sampler(const ModelSpec& spec, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    validate(spec);
    return std::visit(
        [&](const auto& m) -> StepSampler {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, BrownianMotion>) {
                return GaussianStep{m.drift * dt, m.sigma * std::sqrt(dt)};
            } else if constexpr (std::is_same_v<T, StableProcess>) {
                if (m.alpha == 1.0) {
                    const double a = m.scale * dt;
                    return StableStep{1.0, m.beta, a,
                                      m.beta * (2.0 / std::numbers::pi) * a * std::log(a)};
                }
                return StableStep{m.alpha, m.beta, m.scale * std::pow(dt, 1.0 / m.alpha), 0.0};
            } else if constexpr (std::is_same_v<T, SpectrallyPositiveCp>) {
                return JumpDiffusionStep{m.drift * dt, 0.0, m.rate * dt, +1.0, m.jumps};
            } else {
                return JumpDiffusionStep{m.drift * dt, m.sigma * std::sqrt(dt), m.rate * dt, -1.0,
                                         m.jumps};
            }
        },
        spec.family);
}

// One exact draw of X_{t+dt} - X_t.
inline double sample_increment(const ModelSpec& spec, double dt, Rng& rng) {
    auto sampler = make_step_sampler(spec, dt);
    return std::visit([&](const auto& s) { return s(rng); }, sampler);
}

}  // namespace levyup
