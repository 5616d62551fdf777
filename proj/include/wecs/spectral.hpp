// Welch spectral estimation (auto/cross spectra, coherence) and moment
// statistics for sampled series.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <wecs/common.hpp>
#include <wecs/fft.hpp>

namespace wecs::spectral {

struct MomentStats {
    double mean = 0.0;
    double std_dev = 0.0;          // sample standard deviation (n-1)
    double skewness = 0.0;         // population-moment skewness
    double excess_kurtosis = 0.0;  // population-moment kurtosis minus 3
};

inline MomentStats moment_stats(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) {
        throw std::invalid_argument("moment_stats: need at least 2 samples");
    }
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    MomentStats s;
    s.mean = mean;
    s.std_dev = std::sqrt(m2 * static_cast<double>(n) / static_cast<double>(n - 1));
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 0.5 * (1.0 - std::cos(TWO_PI * static_cast<double>(k) /
                                     static_cast<double>(n)));
    }
    return w;
}

struct WelchConfig {
    std::size_t segment_length = 0;  // 0: caller decides before use
    double overlap = 0.5;            // fraction of segment_length
};

/// One-sided auto-spectral density estimate.
struct SpectrumEstimate {
    std::vector<double> frequency_hz;
    std::vector<double> density;  // [x^2 / Hz]
};

/// Coherence magnitude and cross-spectral phase per frequency bin.
struct CrossEstimate {
    std::vector<double> frequency_hz;
    std::vector<double> coherence;  // in [0, 1]
    std::vector<double> phase_rad;  // angle of S_xy
};

/// Largest power of two <= n/divisor, clamped into [lo, hi]; returns 0 when
/// even the smallest admissible segment does not fit.
inline std::size_t default_segment_length(std::size_t n, std::size_t divisor,
                                          std::size_t lo, std::size_t hi) {
    if (n < lo * divisor) return 0;
    std::size_t seg = lo;
    while (seg * 2 <= std::min(n / divisor, hi)) seg *= 2;
    return seg;
}

namespace detail {

struct WelchAccumulator {
    std::vector<double> sxx, syy;
    std::vector<std::complex<double>> sxy;
    std::size_t segments = 0;
};

/// Averaged raw spectra of (x, y) over mean-removed, Hann-windowed segments.
inline WelchAccumulator welch_average(std::span<const double> x,
                                      std::span<const double> y,
                                      const WelchConfig& cfg) {
    const std::size_t n = x.size();
    const std::size_t seg = cfg.segment_length;
    if (seg < 16) {
        throw std::invalid_argument("welch: segment length must be >= 16");
    }
    if (n < seg) {
        throw std::invalid_argument("welch: series shorter than one segment");
    }
    if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) {
        throw std::invalid_argument("welch: overlap must be in [0, 1)");
    }
    const std::size_t step =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::lround((1.0 - cfg.overlap) *
                                                 static_cast<double>(seg))));
    const auto window = hann_window(seg);

    const std::size_t half = seg / 2;
    WelchAccumulator acc;
    acc.sxx.assign(half + 1, 0.0);
    acc.syy.assign(half + 1, 0.0);
    acc.sxy.assign(half + 1, {0.0, 0.0});

    std::vector<std::complex<double>> fx(seg), fy(seg);
    for (std::size_t start = 0; start + seg <= n; start += step) {
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < seg; ++k) {
            mx += x[start + k];
            my += y[start + k];
        }
        mx /= static_cast<double>(seg);
        my /= static_cast<double>(seg);
        for (std::size_t k = 0; k < seg; ++k) {
            fx[k] = window[k] * (x[start + k] - mx);
            fy[k] = window[k] * (y[start + k] - my);
        }
        fft::forward(fx);
        fft::forward(fy);
        for (std::size_t k = 0; k <= half; ++k) {
            acc.sxx[k] += std::norm(fx[k]);
            acc.syy[k] += std::norm(fy[k]);
            acc.sxy[k] += fx[k] * std::conj(fy[k]);
        }
        ++acc.segments;
    }
    return acc;
}

inline double window_power(std::size_t seg) {
    const auto w = hann_window(seg);
    double u = 0.0;
    for (double v : w) u += v * v;
    return u;
}

}  // namespace detail

/// Welch one-sided PSD with per-segment mean removal and a Hann window.
/// The density integrates (sum * df) to the series' fluctuation variance.
inline SpectrumEstimate welch_psd(std::span<const double> x, double sample_rate_hz,
                                  const WelchConfig& cfg) {
    if (!(sample_rate_hz > 0.0)) {
        throw std::invalid_argument("welch_psd: sample rate must be > 0");
    }
    const auto acc = detail::welch_average(x, x, cfg);
    const std::size_t seg = cfg.segment_length;
    const std::size_t half = seg / 2;
    const double u = detail::window_power(seg);
    const double scale =
        1.0 / (sample_rate_hz * u * static_cast<double>(acc.segments));

    SpectrumEstimate est;
    est.frequency_hz.resize(half + 1);
    est.density.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        est.frequency_hz[k] =
            static_cast<double>(k) * sample_rate_hz / static_cast<double>(seg);
        const bool interior = (k != 0) && !(seg % 2 == 0 && k == half);
        est.density[k] = (interior ? 2.0 : 1.0) * scale * acc.sxx[k];
    }
    return est;
}

/// Welch magnitude coherence and cross-spectral phase of two equal-length
/// series. Phase convention: angle of E[X conj(Y)].
inline CrossEstimate welch_cross(std::span<const double> x,
                                 std::span<const double> y,
                                 double sample_rate_hz, const WelchConfig& cfg) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("welch_cross: length mismatch");
    }
    if (!(sample_rate_hz > 0.0)) {
        throw std::invalid_argument("welch_cross: sample rate must be > 0");
    }
    const auto acc = detail::welch_average(x, y, cfg);
    const std::size_t seg = cfg.segment_length;
    const std::size_t half = seg / 2;

    CrossEstimate est;
    est.frequency_hz.resize(half + 1);
    est.coherence.resize(half + 1);
    est.phase_rad.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        est.frequency_hz[k] =
            static_cast<double>(k) * sample_rate_hz / static_cast<double>(seg);
        const double denom = acc.sxx[k] * acc.syy[k];
        if (denom > 0.0) {
            const double c2 = std::norm(acc.sxy[k]) / denom;
            est.coherence[k] = std::sqrt(std::min(1.0, c2));
        } else {
            est.coherence[k] = 0.0;
        }
        est.phase_rad[k] = std::arg(acc.sxy[k]);
    }
    return est;
}

}  // namespace wecs::spectral
