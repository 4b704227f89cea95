#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "levyup/rng.hpp"

namespace levyup {

// Sample set with optional nonnegative weights (h-transform estimates carry
// importance weights).
struct EmpiricalDistribution {
    std::vector<double> samples;
    std::vector<double> weights;  // empty means unweighted

    bool weighted() const { return !weights.empty(); }

    void check() const {
        if (samples.empty()) throw std::invalid_argument("empty sample");
        if (!weights.empty()) {
            if (weights.size() != samples.size())
                throw std::invalid_argument("weights/sample size mismatch");
            double total = 0.0;
            for (double w : weights) {
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw std::invalid_argument("weights must be nonnegative and finite");
                total += w;
            }
            if (!(total > 0.0)) throw std::invalid_argument("weights must have positive sum");
        }
    }

    // Kish effective sample size (sum w)^2 / sum w^2.
    double effective_n() const {
        if (weights.empty()) return static_cast<double>(samples.size());
        double s = 0.0, s2 = 0.0;
        for (double w : weights) {
            s += w;
            s2 += w * w;
        }
        return s * s / s2;
    }
};

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr r;
    r.n = static_cast<long>(xs.size());
    if (r.n == 0) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(r.n);
    if (r.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (static_cast<double>(r.n) * static_cast<double>(r.n - 1)));
    }
    return r;
}

inline double binomial_stderr(double p_hat, double n) {
    return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / n);
}

// Asymptotic Kolmogorov-Smirnov critical coefficient c(alpha) with
// P(sup |B(t)| > c) = alpha; critical value is c/sqrt(n) (one-sample) or
// c*sqrt((n+m)/(n m)) (two-sample).
inline double ks_critical_coefficient(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha in (0,1)");
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

inline double ks_one_sample_critical(double alpha, double n_eff) {
    return ks_critical_coefficient(alpha) / std::sqrt(n_eff);
}

inline double ks_two_sample_critical(double alpha, double n_eff, double m_eff) {
    return ks_critical_coefficient(alpha) * std::sqrt((n_eff + m_eff) / (n_eff * m_eff));
}

// sup_x |F_n(x) - F(x)| against a continuous cdf.
inline double ks_statistic_one_sample(std::vector<double> xs,
                                      const std::function<double(double)>& cdf) {
    if (xs.empty()) throw std::invalid_argument("empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

namespace detail {

struct WeightedSorted {
    std::vector<double> x;
    std::vector<double> w;  // normalized to sum 1
};

inline WeightedSorted sorted_normalized(const EmpiricalDistribution& e) {
    e.check();
    const std::size_t n = e.samples.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return e.samples[a] < e.samples[b]; });
    WeightedSorted out;
    out.x.resize(n);
    out.w.resize(n);
    double total = 0.0;
    if (e.weighted()) {
        for (double w : e.weights) total += w;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] = e.samples[idx[i]];
            out.w[i] = e.weights[idx[i]] / total;
        }
    } else {
        const double uw = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] = e.samples[idx[i]];
            out.w[i] = uw;
        }
    }
    return out;
}

}  // namespace detail

// Two-sample KS statistic; supports weights on either side. Ties are handled
// by advancing both ecdfs through equal values before comparing.
inline double ks_statistic_two_sample(const EmpiricalDistribution& a,
                                      const EmpiricalDistribution& b) {
    const auto sa = detail::sorted_normalized(a);
    const auto sb = detail::sorted_normalized(b);
    std::size_t i = 0, j = 0;
    double fa = 0.0, fb = 0.0, d = 0.0;
    while (i < sa.x.size() || j < sb.x.size()) {
        double v;
        if (j >= sb.x.size() || (i < sa.x.size() && sa.x[i] <= sb.x[j]))
            v = sa.x[i];
        else
            v = sb.x[j];
        while (i < sa.x.size() && sa.x[i] == v) fa += sa.w[i++];
        while (j < sb.x.size() && sb.x[j] == v) fb += sb.w[j++];
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// Exact-style permutation p-value for the two-sample statistic (unweighted),
// for small samples where the asymptotic critical value is unreliable.
inline double ks_two_sample_permutation_pvalue(const std::vector<double>& a,
                                               const std::vector<double>& b, int n_perm,
                                               Rng& rng) {
    EmpiricalDistribution ea{a, {}}, eb{b, {}};
    const double observed = ks_statistic_two_sample(ea, eb);
    std::vector<double> pool(a.size() + b.size());
    std::copy(a.begin(), a.end(), pool.begin());
    std::copy(b.begin(), b.end(), pool.begin() + static_cast<std::ptrdiff_t>(a.size()));
    int exceed = 0;
    for (int p = 0; p < n_perm; ++p) {
        for (std::size_t k = pool.size(); k > 1; --k) {
            const std::size_t r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
            std::swap(pool[k - 1], pool[std::min(r, k - 1)]);
        }
        EmpiricalDistribution pa{{pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(a.size())}, {}};
        EmpiricalDistribution pb{{pool.begin() + static_cast<std::ptrdiff_t>(a.size()), pool.end()}, {}};
        if (ks_statistic_two_sample(pa, pb) >= observed) ++exceed;
    }
    return (1.0 + exceed) / (1.0 + n_perm);
}

// ---------------------------------------------------------------------------
// Spearman trend test for a short sequence expected to decrease.
// ---------------------------------------------------------------------------

inline std::vector<double> ranks_of(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[idx[i]] = static_cast<double>(i + 1);
    return r;
}

inline double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("bad spearman input");
    const auto rx = ranks_of(xs);
    const auto ry = ranks_of(ys);
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += rx[i];
        sy += ry[i];
        sxx += rx[i] * rx[i];
        syy += ry[i] * ry[i];
        sxy += rx[i] * ry[i];
    }
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    return cov / std::sqrt(vx * vy);
}

// One-sided exact p-value that the sequence d_0..d_{m-1} decreases with its
// index: p = P(rho_perm <= rho_observed) under random order. Exact
// enumeration for m <= 8.
inline double spearman_decreasing_pvalue(std::span<const double> d) {
    const std::size_t m = d.size();
    if (m < 3 || m > 8) throw std::invalid_argument("trend test supports 3..8 points");
    std::vector<double> pos(m);
    std::iota(pos.begin(), pos.end(), 0.0);
    const double observed = spearman_rho(pos, d);
    std::vector<double> perm(d.begin(), d.end());
    std::sort(perm.begin(), perm.end());
    long total = 0, at_most = 0;
    do {
        ++total;
        if (spearman_rho(pos, perm) <= observed + 1e-12) ++at_most;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(at_most) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Distance correlation with a permutation test. O(n^2) memory and time;
// intended for a few thousand points.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> centered_distance_matrix(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> m(n * n);
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::abs(v[i] - v[j]);
            m[i * n + j] = d;
            row_mean[i] += d;
        }
        row_mean[i] /= static_cast<double>(n);
        grand += row_mean[i];
    }
    grand /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] -= row_mean[i] + row_mean[j] - grand;
    return m;
}

inline double dcov2_from_centered(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n * n; ++k) s += a[k] * b[k];
    return s / static_cast<double>(n * n);
}

}  // namespace detail

inline double distance_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 4) throw std::invalid_argument("bad dcor input");
    const std::size_t n = x.size();
    const auto a = detail::centered_distance_matrix(x);
    const auto b = detail::centered_distance_matrix(y);
    const double vxy = detail::dcov2_from_centered(a, b, n);
    const double vx = detail::dcov2_from_centered(a, a, n);
    const double vy = detail::dcov2_from_centered(b, b, n);
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    return std::sqrt(std::max(vxy, 0.0) / std::sqrt(vx * vy));
}

struct DcorTestResult {
    double statistic = 0.0;  // observed distance correlation
    double pvalue = 1.0;
    double critical = 0.0;   // permutation (1-alpha) quantile of the statistic
};

inline DcorTestResult dcor_permutation_test(std::span<const double> x, std::span<const double> y,
                                            int n_perm, double alpha, Rng& rng) {
    if (x.size() != y.size() || x.size() < 4) throw std::invalid_argument("bad dcor input");
    const std::size_t n = x.size();
    const auto a = detail::centered_distance_matrix(x);
    const auto b = detail::centered_distance_matrix(y);
    const double vx = detail::dcov2_from_centered(a, a, n);
    const double vy = detail::dcov2_from_centered(b, b, n);
    auto stat_for = [&](const std::vector<std::size_t>& perm) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* arow = &a[i * n];
            const double* brow = &b[perm[i] * n];
            for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[perm[j]];
        }
        const double v = s / static_cast<double>(n * n);
        if (vx <= 0.0 || vy <= 0.0) return 0.0;
        return std::sqrt(std::max(v, 0.0) / std::sqrt(vx * vy));
    };

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    DcorTestResult out;
    out.statistic = stat_for(perm);

    std::vector<double> null_stats;
    null_stats.reserve(static_cast<std::size_t>(n_perm));
    int exceed = 0;
    for (int p = 0; p < n_perm; ++p) {
        for (std::size_t k = n; k > 1; --k) {
            const std::size_t r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
            std::swap(perm[k - 1], perm[std::min(r, k - 1)]);
        }
        const double s = stat_for(perm);
        null_stats.push_back(s);
        if (s >= out.statistic) ++exceed;
    }
    out.pvalue = (1.0 + exceed) / (1.0 + n_perm);
    std::sort(null_stats.begin(), null_stats.end());
    const std::size_t q = static_cast<std::size_t>(
        std::min(static_cast<double>(null_stats.size() - 1),
                 std::ceil((1.0 - alpha) * static_cast<double>(null_stats.size()))));
    out.critical = null_stats[q];
    return out;
}

}  // namespace levyup
