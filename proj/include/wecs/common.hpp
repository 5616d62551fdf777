// Shared numeric utilities: error types, deterministic sampling, interpolation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wecs {

inline constexpr double PI = 3.14159265358979323846;
inline constexpr double TWO_PI = 2.0 * PI;

/// Configuration/specification failure. Collects every issue found during
/// validation instead of stopping at the first one.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string msg = "validation failed:";
        for (const auto& s : issues) {
            msg += "\n  - " + s;
        }
        return msg;
    }

    std::vector<std::string> issues_;
};

/// Integration abort: a state entry went non-finite or a solve failed
/// irrecoverably mid-run. Carries the step index and the offending component.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t step, std::string component)
        : std::runtime_error(what + " at step " + std::to_string(step) +
                             " (component: " + component + ")"),
          step_(step),
          component_(std::move(component)) {}

    std::size_t step() const { return step_; }
    const std::string& component() const { return component_; }

private:
    std::size_t step_;
    std::string component_;
};

/// Deterministic standard-normal sampler: mt19937_64 plus Box-Muller, so the
/// produced stream depends only on the seed, not on the standard library's
/// distribution internals.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in (0, 1], 53-bit resolution.
    double uniform() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// One standard-normal draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = TWO_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Piecewise-linear table y(x) over strictly increasing knots. Queries outside
/// the knot range clamp to the end values.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;

    PiecewiseLinear(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size() || x_.size() < 2) {
            throw std::invalid_argument("PiecewiseLinear: need at least 2 knots");
        }
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (!std::isfinite(x_[i]) || !std::isfinite(y_[i])) {
                throw std::invalid_argument("PiecewiseLinear: non-finite knot");
            }
            if (i > 0 && !(x_[i] > x_[i - 1])) {
                throw std::invalid_argument(
                    "PiecewiseLinear: knot abscissae must be strictly increasing");
            }
        }
    }

    bool empty() const { return x_.empty(); }
    std::size_t size() const { return x_.size(); }
    double min_x() const { return x_.front(); }
    double max_x() const { return x_.back(); }
    double knot_x(std::size_t i) const { return x_[i]; }
    double knot_y(std::size_t i) const { return y_[i]; }

    /// Clamped linear interpolation.
    double operator()(double q) const {
        if (q <= x_.front()) return y_.front();
        if (q >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), q);
        const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
        const std::size_t lo = hi - 1;
        const double t = (q - x_[lo]) / (x_[hi] - x_[lo]);
        return y_[lo] + t * (y_[hi] - y_[lo]);
    }

    /// Exact integral of the clamped interpolant over [lo, hi], lo <= hi.
    double integral(double lo, double hi) const {
        if (!(hi >= lo)) {
            throw std::invalid_argument("PiecewiseLinear::integral: hi < lo");
        }
        double total = 0.0;
        // Clamped flat extension below the first knot.
        if (lo < x_.front()) {
            const double b = std::min(hi, x_.front());
            total += (b - lo) * y_.front();
        }
        // Interior segments.
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            const double a = std::max(lo, x_[i]);
            const double b = std::min(hi, x_[i + 1]);
            if (b <= a) continue;
            total += (b - a) * 0.5 * ((*this)(a) + (*this)(b));
        }
        // Clamped flat extension above the last knot.
        if (hi > x_.back()) {
            const double a = std::max(lo, x_.back());
            total += (hi - a) * y_.back();
        }
        return total;
    }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

}  // namespace wecs
