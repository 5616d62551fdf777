// Spatially correlated stochastic wind synthesis on a grid of points.
//
// A field is specified statistically: a Gaussian marginal per point (mean
// from the height profile, standard deviation from a turbulence model), an
// auto-spectral density per point, and a pairwise coherence magnitude plus
// cross-spectral phase. Synthesis factors the target cross-spectral matrix
// per frequency bin (Cholesky), drives it with seeded complex Gaussian
// phasors and inverse-transforms to the time domain, so the series is
// stationary from the first sample and exactly zero-trend over the record.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <wecs/common.hpp>
#include <wecs/fft.hpp>
#include <wecs/geometry.hpp>
#include <wecs/spectral.hpp>

namespace wecs::windfield {

using geometry::Vec3;

struct GridPoint {
    int id = 0;
    Vec3 position;  // wind-park coordinates [m], z above ground
};

/// sigma_v = mu_v * R
struct DirectTurbulence {
    double intensity = 0.0;  // R [-]
};

/// sigma_v = mu_v / ln(z / z0)
struct PanowskyTurbulence {
    double roughness_length_m = 0.0;  // z0 [m]
};

using TurbulenceModel = std::variant<DirectTurbulence, PanowskyTurbulence>;

/// Normalized spectral shape 4(fL/mu) / (1 + 6 fL/mu)^(5/3), scaled so the
/// one-sided density integrates to sigma_v^2 over [0, inf).
struct KaimalPsd {
    double length_scale_m = 0.0;  // L [m]
};

/// User-supplied (frequency [Hz], density) knots, clamped outside the knot
/// range and rescaled so the clamped curve integrates to sigma_v^2 over
/// [0, Nyquist].
struct TabulatedPsd {
    PiecewiseLinear table;
};

using PsdModel = std::variant<KaimalPsd, TabulatedPsd>;

/// coh(i,j,f) = exp(-a f dist(i,j) / mu), mu the mean of the two points'
/// mean speeds.
struct DavenportCoherence {
    double decay = 0.0;  // a [-]
};

/// One (frequency, coherence) table applied to every distinct pair.
struct TabulatedCoherence {
    PiecewiseLinear table;
};

using CoherenceModel = std::variant<DavenportCoherence, TabulatedCoherence>;

struct ZeroAngle {};

/// Cross-spectral phase table (frequency [Hz], angle [rad]). The phase
/// between points i and j (list order) is (j - i) * angle(f), i.e. a
/// per-point phase ladder, which keeps the cross-spectral matrix positive
/// semidefinite for any number of points.
struct TabulatedAngle {
    PiecewiseLinear table;
};

using AngleModel = std::variant<ZeroAngle, TabulatedAngle>;

struct WindFieldSpec {
    std::vector<GridPoint> points;
    double nacelle_height_m = 0.0;  // Z_N
    double nacelle_wind_mps = 0.0;  // v_H
    double shear_exponent = 0.0;    // alpha
    TurbulenceModel turbulence = DirectTurbulence{0.0};
    PsdModel psd = KaimalPsd{100.0};
    CoherenceModel coherence = DavenportCoherence{7.5};
    AngleModel angle_tf = ZeroAngle{};
    double sample_rate_hz = 0.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;

    std::size_t step_count() const {
        return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
    }

    /// Collects every violated invariant; throws ValidationError if any.
    void validate() const;
};

struct WindSeries {
    double dt_s = 0.0;
    std::size_t n_points = 0;
    std::size_t n_steps = 0;
    std::vector<double> samples;  // row-major [point][step]

    double at(std::size_t point, std::size_t step) const {
        return samples[point * n_steps + step];
    }
    std::span<const double> point(std::size_t p) const {
        return {samples.data() + p * n_steps, n_steps};
    }
};

// ---------------------------------------------------------------------------
// Pointwise statistical targets
// ---------------------------------------------------------------------------

/// Gaussian probability density, Eq.-style f(v) = exp(-(v-mu)^2/(2 s^2)) / sqrt(2 pi s^2).
inline double gaussian_pdf(double v, double mu, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::domain_error("gaussian_pdf: sigma must be > 0");
    }
    const double d = (v - mu) / sigma;
    return std::exp(-0.5 * d * d) / (sigma * std::sqrt(TWO_PI));
}

/// Power-law height profile mu_v = v_H (Z / Z_N)^alpha.
inline double mean_velocity_at_height(const WindFieldSpec& spec, double z) {
    if (!(z >= 0.0)) {
        throw std::domain_error("mean_velocity_at_height: height must be >= 0");
    }
    if (!(spec.nacelle_height_m > 0.0)) {
        throw std::domain_error("mean_velocity_at_height: nacelle height must be > 0");
    }
    return spec.nacelle_wind_mps * std::pow(z / spec.nacelle_height_m, spec.shear_exponent);
}

/// Standard deviation of the wind speed at height z for local mean mu.
inline double turbulence_sigma(const WindFieldSpec& spec, double mu, double z) {
    if (!(mu >= 0.0)) {
        throw std::domain_error("turbulence_sigma: mean must be >= 0");
    }
    if (const auto* direct = std::get_if<DirectTurbulence>(&spec.turbulence)) {
        return mu * direct->intensity;
    }
    const auto& pan = std::get<PanowskyTurbulence>(spec.turbulence);
    if (!(z > pan.roughness_length_m)) {
        throw std::domain_error(
            "turbulence_sigma: Panowsky model requires z > roughness length");
    }
    return mu / std::log(z / pan.roughness_length_m);
}

namespace detail {

inline double kaimal_shape(double f, double length_scale, double mu) {
    // Integrates to exactly 1 over f in [0, inf).
    if (!(mu > 0.0)) return 0.0;
    const double x = length_scale / mu;
    return 4.0 * x / std::pow(1.0 + 6.0 * f * x, 5.0 / 3.0);
}

}  // namespace detail

/// One-sided target PSD at a grid point; integrates to sigma_v^2 at that
/// point (exactly for the Kaimal form, over [0, Nyquist] for tables).
inline double target_psd(const WindFieldSpec& spec, const GridPoint& point, double f) {
    if (!(f >= 0.0)) {
        throw std::domain_error("target_psd: frequency must be >= 0");
    }
    const double mu = mean_velocity_at_height(spec, point.position.z);
    const double sigma = turbulence_sigma(spec, mu, point.position.z);
    const double var = sigma * sigma;
    if (const auto* kaimal = std::get_if<KaimalPsd>(&spec.psd)) {
        return var * detail::kaimal_shape(f, kaimal->length_scale_m, mu);
    }
    const auto& tab = std::get<TabulatedPsd>(spec.psd);
    const double nyquist = 0.5 * spec.sample_rate_hz;
    const double raw_integral = tab.table.integral(0.0, nyquist);
    if (!(raw_integral > 0.0)) return 0.0;
    return var / raw_integral * tab.table(f);
}

/// Coherence magnitude between two grid points; 1 on the diagonal and
/// symmetric by construction.
inline double target_coherence(const WindFieldSpec& spec, const GridPoint& a,
                               const GridPoint& b, double f) {
    if (!(f >= 0.0)) {
        throw std::domain_error("target_coherence: frequency must be >= 0");
    }
    const double dist = (a.position - b.position).norm();
    if (dist == 0.0) return 1.0;
    if (const auto* dav = std::get_if<DavenportCoherence>(&spec.coherence)) {
        const double mu = 0.5 * (mean_velocity_at_height(spec, a.position.z) +
                                 mean_velocity_at_height(spec, b.position.z));
        if (!(mu > 0.0)) return 1.0;
        return std::exp(-dav->decay * f * dist / mu);
    }
    const auto& tab = std::get<TabulatedCoherence>(spec.coherence);
    return std::clamp(tab.table(f), 0.0, 1.0);
}

/// Cross-spectral phase target for the ordered pair (i, j) of point indices.
inline double target_phase(const WindFieldSpec& spec, std::size_t i, std::size_t j,
                           double f) {
    if (std::holds_alternative<ZeroAngle>(spec.angle_tf)) return 0.0;
    const auto& tab = std::get<TabulatedAngle>(spec.angle_tf);
    return (static_cast<double>(j) - static_cast<double>(i)) * tab.table(f);
}

inline void WindFieldSpec::validate() const {
    std::vector<std::string> issues;
    if (points.empty()) issues.push_back("wind.points: at least one grid point required");
    std::vector<int> ids;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto& gp = points[p];
        if (!gp.position.finite()) {
            issues.push_back("wind.points[" + std::to_string(p) + "]: non-finite position");
        } else if (!(gp.position.z > 0.0)) {
            issues.push_back("wind.points[" + std::to_string(p) +
                             "].z_m: must be > 0 (above ground)");
        }
        ids.push_back(gp.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        issues.push_back("wind.points: ids must be unique");
    }
    if (!(nacelle_height_m > 0.0)) issues.push_back("wind.nacelle_height_m: must be > 0");
    if (!(nacelle_wind_mps >= 0.0)) issues.push_back("wind.nacelle_wind_mps: must be >= 0");
    if (!(shear_exponent >= 0.0)) issues.push_back("wind.shear_exponent: must be >= 0");
    if (const auto* direct = std::get_if<DirectTurbulence>(&turbulence)) {
        if (!(direct->intensity >= 0.0)) {
            issues.push_back("wind.turbulence.direct.intensity: must be >= 0");
        }
    } else if (const auto* pan = std::get_if<PanowskyTurbulence>(&turbulence)) {
        if (!(pan->roughness_length_m > 0.0)) {
            issues.push_back("wind.turbulence.panowsky.roughness_length_m: must be > 0");
        } else {
            for (const auto& gp : points) {
                if (gp.position.z <= pan->roughness_length_m) {
                    issues.push_back("wind.points[id " + std::to_string(gp.id) +
                                     "]: z_m must exceed the Panowsky roughness length");
                }
            }
        }
    }
    if (const auto* kaimal = std::get_if<KaimalPsd>(&psd)) {
        if (!(kaimal->length_scale_m > 0.0)) {
            issues.push_back("wind.psd.kaimal.length_scale_m: must be > 0");
        }
    }
    if (!(sample_rate_hz > 0.0)) issues.push_back("wind.sample_rate_hz: must be > 0");
    if (!(duration_s > 0.0)) issues.push_back("wind.duration_s: must be > 0");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

namespace detail {

/// Cholesky factor of a Hermitian positive-semidefinite matrix (row-major
/// n x n). A relative diagonal jitter keeps nearly rank-deficient targets
/// (fully coherent points) factorizable; exact zero pivots yield zero rows.
inline std::vector<std::complex<double>> cholesky_psd(
    std::vector<std::complex<double>> a, std::size_t n) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, a[i * n + i].real());
    }
    const double jitter = 1e-12 * max_diag;
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += jitter;

    std::vector<std::complex<double>> l(n * n, {0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j].real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l[j * n + k]);
        if (d < -1e-8 * std::max(max_diag, 1e-300)) {
            throw std::runtime_error(
                "wind synthesis: cross-spectral matrix is not positive semidefinite");
        }
        if (d <= 0.0) continue;  // zero pivot: row stays zero
        const double pivot = std::sqrt(d);
        l[j * n + j] = pivot;
        for (std::size_t i = j + 1; i < n; ++i) {
            std::complex<double> s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= l[i * n + k] * std::conj(l[j * n + k]);
            }
            l[i * n + j] = s / pivot;
        }
    }
    return l;
}

}  // namespace detail

/// Synthesize the multi-point series. Deterministic for a given seed; the
/// per-point discrete amplitude sum is rescaled to reproduce sigma_v^2
/// exactly, and the DC bin carries the mean, so the record's sample mean
/// equals mu_v to rounding.
inline WindSeries generate(const WindFieldSpec& spec) {
    spec.validate();
    const std::size_t n = spec.step_count();
    if (n < 64) {
        throw ValidationError(
            {"wind: duration_s * sample_rate_hz must give at least 64 steps, got " +
             std::to_string(n)});
    }
    const std::size_t n_pts = spec.points.size();
    const double df = spec.sample_rate_hz / static_cast<double>(n);
    const bool even = (n % 2 == 0);
    const std::size_t half = n / 2;
    const std::size_t last_regular = even ? half - 1 : half;

    std::vector<double> mu(n_pts), amp_scale(n_pts);
    for (std::size_t i = 0; i < n_pts; ++i) {
        const double z = spec.points[i].position.z;
        mu[i] = mean_velocity_at_height(spec, z);
        const double sigma = turbulence_sigma(spec, mu[i], z);
        double discrete_var = 0.0;
        for (std::size_t k = 1; k <= last_regular; ++k) {
            discrete_var += target_psd(spec, spec.points[i], static_cast<double>(k) * df) * df;
        }
        if (even) {
            discrete_var += target_psd(spec, spec.points[i],
                                       static_cast<double>(half) * df) * df;
        }
        amp_scale[i] = (sigma > 0.0 && discrete_var > 0.0)
                           ? std::sqrt(sigma * sigma / discrete_var)
                           : 0.0;
    }

    std::vector<std::vector<std::complex<double>>> spectrum(
        n_pts, std::vector<std::complex<double>>(n, {0.0, 0.0}));
    for (std::size_t i = 0; i < n_pts; ++i) {
        spectrum[i][0] = {static_cast<double>(n) * mu[i], 0.0};
    }

    GaussianSampler rng(spec.seed);
    std::vector<double> sqrt_s(n_pts);
    std::vector<std::complex<double>> matrix(n_pts * n_pts);
    std::vector<std::complex<double>> xi(n_pts), mixed(n_pts);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    for (std::size_t k = 1; k <= last_regular; ++k) {
        const double f = static_cast<double>(k) * df;
        for (std::size_t i = 0; i < n_pts; ++i) {
            sqrt_s[i] = amp_scale[i] *
                        std::sqrt(std::max(0.0, target_psd(spec, spec.points[i], f)));
        }
        for (std::size_t i = 0; i < n_pts; ++i) {
            matrix[i * n_pts + i] = sqrt_s[i] * sqrt_s[i];
            for (std::size_t j = i + 1; j < n_pts; ++j) {
                const double mag = sqrt_s[i] * sqrt_s[j] *
                                   target_coherence(spec, spec.points[i], spec.points[j], f);
                const double phase = target_phase(spec, i, j, f);
                const std::complex<double> v = std::polar(mag, phase);
                matrix[i * n_pts + j] = v;
                matrix[j * n_pts + i] = std::conj(v);
            }
        }
        const auto l = detail::cholesky_psd(matrix, n_pts);
        for (std::size_t i = 0; i < n_pts; ++i) {
            const double re = rng.normal();
            const double im = rng.normal();
            xi[i] = {re * inv_sqrt2, im * inv_sqrt2};  // E|xi|^2 = 1
        }
        for (std::size_t i = 0; i < n_pts; ++i) {
            std::complex<double> s{0.0, 0.0};
            for (std::size_t j = 0; j <= i; ++j) s += l[i * n_pts + j] * xi[j];
            mixed[i] = s;
        }
        const double bin_scale = static_cast<double>(n) * std::sqrt(0.5 * df);
        for (std::size_t i = 0; i < n_pts; ++i) {
            spectrum[i][k] = bin_scale * mixed[i];
            spectrum[i][n - k] = std::conj(spectrum[i][k]);
        }
    }

    if (even) {
        // The Nyquist bin must be real: sample from the real part of the
        // cross-spectral matrix, which is positive semidefinite as well.
        const double f = static_cast<double>(half) * df;
        for (std::size_t i = 0; i < n_pts; ++i) {
            sqrt_s[i] = amp_scale[i] *
                        std::sqrt(std::max(0.0, target_psd(spec, spec.points[i], f)));
        }
        for (std::size_t i = 0; i < n_pts; ++i) {
            matrix[i * n_pts + i] = sqrt_s[i] * sqrt_s[i];
            for (std::size_t j = i + 1; j < n_pts; ++j) {
                const double mag = sqrt_s[i] * sqrt_s[j] *
                                   target_coherence(spec, spec.points[i], spec.points[j], f);
                const double re = mag * std::cos(target_phase(spec, i, j, f));
                matrix[i * n_pts + j] = re;
                matrix[j * n_pts + i] = re;
            }
        }
        const auto l = detail::cholesky_psd(matrix, n_pts);
        for (std::size_t i = 0; i < n_pts; ++i) xi[i] = {rng.normal(), 0.0};
        const double bin_scale = static_cast<double>(n) * std::sqrt(df);
        for (std::size_t i = 0; i < n_pts; ++i) {
            std::complex<double> s{0.0, 0.0};
            for (std::size_t j = 0; j <= i; ++j) s += l[i * n_pts + j] * xi[j];
            spectrum[i][half] = bin_scale * s.real();
        }
    }

    WindSeries series;
    series.dt_s = 1.0 / spec.sample_rate_hz;
    series.n_points = n_pts;
    series.n_steps = n;
    series.samples.resize(n_pts * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n_pts; ++i) {
        fft::inverse(spectrum[i]);
        for (std::size_t t = 0; t < n; ++t) {
            series.samples[i * n + t] = spectrum[i][t].real() * inv_n;
        }
    }
    return series;
}

// ---------------------------------------------------------------------------
// Estimation and verification
// ---------------------------------------------------------------------------

struct WindStatisticsConfig {
    std::size_t psd_segment = 0;        // 0: auto (pow2 <= n/16, in [64, 4096])
    std::size_t coherence_segment = 0;  // 0: auto (pow2 <= n/128, in [64, 1024])
};

struct PointStatistics {
    std::size_t point_index = 0;
    spectral::MomentStats moments;
    spectral::SpectrumEstimate psd;
};

struct PairStatistics {
    std::size_t index_i = 0;
    std::size_t index_j = 0;
    spectral::CrossEstimate cross;
};

struct StatisticsReport {
    double dt_s = 0.0;
    std::size_t psd_segment = 0;
    std::size_t coherence_segment = 0;
    std::vector<PointStatistics> points;
    std::vector<PairStatistics> pairs;  // all i < j; COH(j,i) is the same entry
};

/// Welch statistics of a synthesized (or externally supplied) series.
/// Coherence uses shorter segments than the PSD: more averaging suppresses
/// the zero-coherence bias while the PSD keeps its low-frequency resolution.
inline StatisticsReport estimate_statistics(const WindSeries& series,
                                            WindStatisticsConfig cfg = {}) {
    const std::size_t n = series.n_steps;
    const std::size_t min_needed = 8 * 64;
    if (n < min_needed) {
        throw std::invalid_argument(
            "estimate_statistics: series too short, need at least " +
            std::to_string(min_needed) + " steps, got " + std::to_string(n));
    }
    std::size_t psd_seg = cfg.psd_segment
                              ? cfg.psd_segment
                              : spectral::default_segment_length(n, 16, 64, 4096);
    if (psd_seg == 0) psd_seg = 64;
    std::size_t coh_seg = cfg.coherence_segment
                              ? cfg.coherence_segment
                              : spectral::default_segment_length(n, 128, 64, 1024);
    if (coh_seg == 0) coh_seg = 64;
    if (n < 8 * psd_seg || n < 8 * coh_seg) {
        throw std::invalid_argument(
            "estimate_statistics: need n_steps >= 8 x segment length (" +
            std::to_string(8 * std::max(psd_seg, coh_seg)) + ")");
    }

    const double fs = 1.0 / series.dt_s;
    StatisticsReport report;
    report.dt_s = series.dt_s;
    report.psd_segment = psd_seg;
    report.coherence_segment = coh_seg;
    for (std::size_t p = 0; p < series.n_points; ++p) {
        PointStatistics ps;
        ps.point_index = p;
        ps.moments = spectral::moment_stats(series.point(p));
        ps.psd = spectral::welch_psd(series.point(p), fs, {psd_seg, 0.5});
        report.points.push_back(std::move(ps));
    }
    for (std::size_t i = 0; i < series.n_points; ++i) {
        for (std::size_t j = i + 1; j < series.n_points; ++j) {
            PairStatistics pr;
            pr.index_i = i;
            pr.index_j = j;
            pr.cross = spectral::welch_cross(series.point(i), series.point(j), fs,
                                             {coh_seg, 0.5});
            report.pairs.push_back(std::move(pr));
        }
    }
    return report;
}

struct VerifyTolerances {
    double mean_rel = 0.02;
    double std_rel = 0.05;
    double skew_abs = 0.1;
    double kurtosis_abs = 0.2;
    double psd_band_db = 1.5;
    double coherence_rms = 0.1;
    double band_lo_hz = 0.01;
    double band_hi_hz = 5.0;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    bool all_pass = true;

    void add(std::string name, double value, double bound) {
        const bool ok = std::abs(value) <= bound;
        checks.push_back({std::move(name), value, bound, ok});
        all_pass = all_pass && ok;
    }
};

namespace detail {

/// Indices [begin, end) of consecutive PSD bins grouped into log-like bands:
/// each band spans at least 25% of its start frequency and at least 4 bins.
inline std::vector<std::pair<std::size_t, std::size_t>> band_groups(
    const std::vector<double>& freq, double lo, double hi) {
    std::vector<std::size_t> in_band;
    for (std::size_t k = 0; k < freq.size(); ++k) {
        if (freq[k] >= lo && freq[k] <= hi) in_band.push_back(k);
    }
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    std::size_t g = 0;
    while (g < in_band.size()) {
        const double f_start = freq[in_band[g]];
        std::size_t e = g;
        while (e < in_band.size() &&
               (e - g < 4 || freq[in_band[e - 1]] < 1.25 * f_start)) {
            ++e;
        }
        groups.emplace_back(in_band[g], in_band[e - 1] + 1);
        g = e;
    }
    // A trailing sliver shorter than 4 bins is merged into its predecessor.
    if (groups.size() >= 2) {
        auto& last = groups.back();
        if (last.second - last.first < 4) {
            groups[groups.size() - 2].second = last.second;
            groups.pop_back();
        }
    }
    return groups;
}

}  // namespace detail

/// Compare estimated statistics against the specification's targets.
/// PSD comparison is band-averaged (log-spaced groups of Welch bins) inside
/// [band_lo, min(band_hi, Nyquist)]; coherence error is the RMS deviation
/// over coherence-estimate bins in the same band.
inline VerificationReport verify_series(const WindFieldSpec& spec,
                                        const WindSeries& series,
                                        const StatisticsReport& stats,
                                        const VerifyTolerances& tol = {}) {
    VerificationReport report;
    const double nyquist = 0.5 / series.dt_s;
    const double band_hi = std::min(tol.band_hi_hz, nyquist);

    for (std::size_t p = 0; p < stats.points.size(); ++p) {
        const auto& gp = spec.points[p];
        const auto& m = stats.points[p].moments;
        const double mu = mean_velocity_at_height(spec, gp.position.z);
        const double sigma = turbulence_sigma(spec, mu, gp.position.z);
        const std::string label = "p" + std::to_string(p);

        const double mean_err = (mu != 0.0) ? (m.mean - mu) / mu : m.mean;
        report.add(label + ".mean_rel_err", mean_err, tol.mean_rel);
        if (sigma > 0.0) {
            report.add(label + ".std_rel_err", (m.std_dev - sigma) / sigma, tol.std_rel);
        } else {
            report.add(label + ".std_abs", m.std_dev, 1e-9);
        }
        report.add(label + ".skewness", m.skewness, tol.skew_abs);
        report.add(label + ".excess_kurtosis", m.excess_kurtosis, tol.kurtosis_abs);

        if (sigma > 0.0) {
            const auto groups = detail::band_groups(stats.points[p].psd.frequency_hz,
                                                    tol.band_lo_hz, band_hi);
            double worst_db = 0.0;
            for (const auto& [b, e] : groups) {
                double est = 0.0, target = 0.0;
                for (std::size_t k = b; k < e; ++k) {
                    est += stats.points[p].psd.density[k];
                    target += target_psd(spec, gp, stats.points[p].psd.frequency_hz[k]);
                }
                if (target <= 0.0) continue;
                const double db = 10.0 * std::log10(est / target);
                if (std::abs(db) > std::abs(worst_db)) worst_db = db;
            }
            report.add(label + ".psd_worst_band_db", worst_db, tol.psd_band_db);
        }
    }

    for (const auto& pr : stats.pairs) {
        const auto& gi = spec.points[pr.index_i];
        const auto& gj = spec.points[pr.index_j];
        double sum_sq = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < pr.cross.frequency_hz.size(); ++k) {
            const double f = pr.cross.frequency_hz[k];
            if (f < tol.band_lo_hz || f > band_hi) continue;
            const double err = pr.cross.coherence[k] - target_coherence(spec, gi, gj, f);
            sum_sq += err * err;
            ++count;
        }
        if (count > 0) {
            const std::string label = "pair_" + std::to_string(pr.index_i) + "_" +
                                      std::to_string(pr.index_j);
            report.add(label + ".coherence_rms_err", std::sqrt(sum_sq / count),
                       tol.coherence_rms);
        }
    }
    return report;
}

/// Batch-mean stationarity statistics of one series: two-sample t values for
/// first-half vs second-half mean and log-variance, and the regression t of
/// batch means against time. Batches must be long relative to the integral
/// time scale for the t values to be near-standard under stationarity.
struct StationarityStats {
    double mean_t = 0.0;
    double std_t = 0.0;
    double trend_t = 0.0;
};

inline StationarityStats stationarity_stats(std::span<const double> x,
                                            std::size_t batches_per_half = 16) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    const std::size_t b = batches_per_half;
    const std::size_t len = half / b;
    if (len < 8) {
        throw std::invalid_argument("stationarity_stats: series too short");
    }
    auto batch_stats = [&](std::size_t offset, std::vector<double>& means,
                           std::vector<double>& log_vars) {
        for (std::size_t i = 0; i < b; ++i) {
            double m = 0.0;
            for (std::size_t k = 0; k < len; ++k) m += x[offset + i * len + k];
            m /= static_cast<double>(len);
            double v = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const double d = x[offset + i * len + k] - m;
                v += d * d;
            }
            v /= static_cast<double>(len);
            means.push_back(m);
            log_vars.push_back(v > 0.0 ? std::log(v) : -700.0);
        }
    };
    std::vector<double> means1, means2, lv1, lv2;
    batch_stats(0, means1, lv1);
    batch_stats(half, means2, lv2);

    auto mean_var = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double a : v) s += (a - m) * (a - m);
        s /= static_cast<double>(v.size() - 1);
        return std::pair<double, double>{m, s};
    };
    auto two_sample_t = [&](const std::vector<double>& a, const std::vector<double>& c) {
        const auto [ma, va] = mean_var(a);
        const auto [mc, vc] = mean_var(c);
        const double se = std::sqrt((va + vc) / static_cast<double>(b));
        return se > 0.0 ? (mc - ma) / se : 0.0;
    };

    StationarityStats s;
    s.mean_t = two_sample_t(means1, means2);
    s.std_t = two_sample_t(lv1, lv2);

    // Simple-regression t of all batch means on the batch index.
    std::vector<double> all;
    all.insert(all.end(), means1.begin(), means1.end());
    all.insert(all.end(), means2.begin(), means2.end());
    const std::size_t m = all.size();
    const double xbar = 0.5 * static_cast<double>(m - 1);
    double sxx = 0.0, sxy = 0.0, ybar = 0.0;
    for (double v : all) ybar += v;
    ybar /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        sxx += dx * dx;
        sxy += dx * (all[i] - ybar);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fit = ybar + slope * (static_cast<double>(i) - xbar);
        rss += (all[i] - fit) * (all[i] - fit);
    }
    const double se_slope = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
    s.trend_t = se_slope > 0.0 ? slope / se_slope : 0.0;
    return s;
}

}  // namespace wecs::windfield
