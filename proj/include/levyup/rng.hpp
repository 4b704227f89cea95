#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace levyup {

// 64-bit mixing used for seed derivation (splitmix64 finalizer).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Job seed = hash(root seed, tag, replicate index). Streams derived this way
// are independent of scheduling, so results do not depend on worker count.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                           std::uint64_t replicate = 0) {
    std::uint64_t s = mix64(root ^ 0x6a09e667f3bcc909ULL);
    s = mix64(s ^ hash_tag(tag));
    s = mix64(s ^ (replicate * 0x9e3779b97f4a7c15ULL + 1));
    return s;
}

// Self-contained xoshiro256++ generator. We own the full sampling stack
// (uniform, normal, exponential, Poisson, stable) so that every draw is
// bit-reproducible for a given seed, independent of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            w = mix64(sm);
        }
        has_spare_ = false;
    }

    Rng(std::uint64_t root, std::string_view tag, std::uint64_t replicate = 0)
        : Rng(derive_seed(root, tag, replicate)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0,1): 53-bit mantissa, never exactly 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Marsaglia polar method; the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s <= 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double exponential() { return -std::log(uniform()); }
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Inversion by sequential search; intended for small means (grid steps of
    // a compound Poisson part), where the expected cost is O(1 + mean).
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            const double target = uniform();
            double p = std::exp(-mean);
            double cdf = p;
            long k = 0;
            while (cdf < target && k < 1000) {
                ++k;
                p *= mean / static_cast<double>(k);
                cdf += p;
            }
            return k;
        }
        // Normal approximation with continuity correction for large means.
        const double x = mean + std::sqrt(mean) * normal() + 0.5;
        return x < 0.0 ? 0 : static_cast<long>(x);
    }

    double cauchy() { return std::tan(std::numbers::pi * (uniform() - 0.5)); }

    // Chambers-Mallows-Stuck draw of a standard stable variable in the
    // 1-parameterization: for alpha != 1 the characteristic function is
    // exp(-|u|^alpha (1 - i beta sgn(u) tan(pi alpha/2))), and for alpha = 1
    // it is exp(-|u| (1 + i beta (2/pi) sgn(u) log|u|)).
    double stable(double alpha, double beta) {
        const double theta = std::numbers::pi * (uniform() - 0.5);
        double w;
        do {
            w = exponential();
        } while (w <= 0.0);
        if (alpha == 1.0) {
            const double half_pi = std::numbers::pi / 2.0;
            const double a = half_pi + beta * theta;
            return (a * std::tan(theta) -
                    beta * std::log((half_pi * w * std::cos(theta)) / a)) /
                   half_pi;
        }
        const double t = beta * std::tan(std::numbers::pi * alpha / 2.0);
        const double b = std::atan(t) / alpha;
        const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
        return s * std::sin(alpha * (theta + b)) /
               std::pow(std::cos(theta), 1.0 / alpha) *
               std::pow(std::cos(theta - alpha * (theta + b)) / w,
                        (1.0 - alpha) / alpha);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_;
};

}  // namespace levyup
