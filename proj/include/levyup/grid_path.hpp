#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levyup {

// Discretized cadlag skeleton: values[k] is X at time k*dt. No interpolation
// anywhere; left limits are invisible on the grid. killed_at, when set, is the
// lifetime in grid units (index of the cemetery epoch).
struct GridPath {
    double dt = 1.0;
    std::vector<double> values;
    std::optional<std::size_t> killed_at;
    std::string label;

    // number of living epochs [0, zeta)
    std::size_t living() const {
        const std::size_t n = values.size();
        return killed_at ? std::min(*killed_at, n) : n;
    }
    double time_at(std::size_t k) const { return static_cast<double>(k) * dt; }
};

struct ExcursionRecord {
    std::size_t start_index = 0;  // zero epoch the excursion leaves from
    std::size_t end_index = 0;    // epoch where the reflected path is back at 0
    double length = 0.0;          // (end - start) * dt
    double height = 0.0;          // max of reflected values on the span
    bool censored = false;        // open at the end of the path
};

inline void require_nonempty(const GridPath& path) {
    if (path.values.empty() || path.living() == 0)
        throw std::invalid_argument("path must have at least one living value");
}

// Pointwise running supremum / infimum processes.
inline std::pair<std::vector<double>, std::vector<double>> running_extrema(const GridPath& path) {
    require_nonempty(path);
    const std::size_t n = path.living();
    std::vector<double> sup(n), inf(n);
    double hi = path.values[0], lo = path.values[0];
    for (std::size_t k = 0; k < n; ++k) {
        hi = std::max(hi, path.values[k]);
        lo = std::min(lo, path.values[k]);
        sup[k] = hi;
        inf[k] = lo;
    }
    return {std::move(sup), std::move(inf)};
}

// Last grid index attaining the minimum over [0, zeta), matching the
// m = sup{s : X = inf} convention (ties broken late).
inline std::size_t argmin_time(const GridPath& path) {
    require_nonempty(path);
    const std::size_t n = path.living();
    std::size_t m = 0;
    double lo = path.values[0];
    for (std::size_t k = 1; k < n; ++k) {
        if (path.values[k] <= lo) {
            lo = path.values[k];
            m = k;
        }
    }
    return m;
}

enum class Side { below_strict, at_or_above, above_strict };

// First entrance time into the half-line, using the inf{s > 0 : ...}
// convention: index 0 is never reported even if the path starts inside.
inline std::optional<std::size_t> first_passage(const GridPath& path, double barrier, Side side) {
    require_nonempty(path);
    const std::size_t n = path.living();
    for (std::size_t k = 1; k < n; ++k) {
        const double v = path.values[k];
        const bool inside = side == Side::below_strict ? v < barrier
                            : side == Side::at_or_above ? v >= barrier
                                                        : v > barrier;
        if (inside) return k;
    }
    return std::nullopt;
}

// Last index with value <= x (sigma_x = sup{t : X_t <= x}).
inline std::optional<std::size_t> last_passage(const GridPath& path, double x) {
    require_nonempty(path);
    const std::size_t n = path.living();
    for (std::size_t k = n; k-- > 0;) {
        if (path.values[k] <= x) return k;
    }
    return std::nullopt;
}

// X - inf X, pointwise; nonnegative, vanishing exactly at new-minimum epochs.
inline GridPath reflect_at_infimum(const GridPath& path) {
    require_nonempty(path);
    GridPath out;
    out.dt = path.dt;
    out.killed_at = path.killed_at;
    out.label = path.label;
    const std::size_t n = path.living();
    out.values.resize(n);
    double lo = path.values[0];
    for (std::size_t k = 0; k < n; ++k) {
        lo = std::min(lo, path.values[k]);
        out.values[k] = path.values[k] - lo;
    }
    return out;
}

// Maximal spans where the reflected path is > 0, delimited by new-minimum
// epochs of the original path. A final span still open at the end of the
// living window is returned with censored = true.
inline std::vector<ExcursionRecord> extract_excursions(const GridPath& path) {
    require_nonempty(path);
    const std::size_t n = path.living();
    std::vector<ExcursionRecord> out;
    double lo = path.values[0];
    std::size_t zero_epoch = 0;
    double height = 0.0;
    bool open = false;
    for (std::size_t k = 1; k < n; ++k) {
        const double r = path.values[k] - std::min(lo, path.values[k]);
        if (path.values[k] <= lo) {
            lo = path.values[k];
            if (open) {
                out.push_back({zero_epoch, k, (k - zero_epoch) * path.dt, height, false});
                open = false;
            }
            zero_epoch = k;
        } else {
            if (!open) {
                open = true;
                height = 0.0;
            }
            height = std::max(height, r);
        }
    }
    if (open) {
        out.push_back(
            {zero_epoch, n - 1, (n - 1 - zero_epoch) * path.dt, height, true});
    }
    return out;
}

inline void write_csv(const GridPath& path, std::ostream& os) {
    os.precision(17);
    os << "time,value\n";
    const std::size_t n = path.living();
    for (std::size_t k = 0; k < n; ++k) {
        os << path.time_at(k) << ',' << path.values[k] << '\n';
    }
}

}  // namespace levyup
