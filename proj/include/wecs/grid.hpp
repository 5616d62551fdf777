// Three-phase line segment with concentrated parameters: phase-domain R/L
// matrices from sequence values via the symmetric-components transform,
// the 6th-order transient segment model, and the algebraic RMS phasor solve.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <wecs/common.hpp>
#include <wecs/geometry.hpp>

namespace wecs::grid {

using geometry::Mat3;
using Complex = std::complex<double>;
using CVec3 = std::array<Complex, 3>;
using CMat3 = std::array<std::array<Complex, 3>, 3>;

struct LineSegmentParams {
    double r0_ohm_per_m = 0.0;  // zero-sequence resistance
    double r1_ohm_per_m = 0.0;  // positive-sequence resistance
    double l0_h_per_m = 0.0;
    double l1_h_per_m = 0.0;
    double c_e_f_per_m = 0.0;   // earth capacitance
    double c_l_f_per_m = 0.0;   // line (phase-to-phase) capacitance
    double g_e_s_per_m = 0.0;   // earth conductance
    double g_l_s_per_m = 0.0;   // line conductance
    double length_m = 0.0;      // delta X

    /// Invariant violations as messages; empty means valid. R0 < R1 is
    /// unusual but allowed, reported through `warnings`.
    std::vector<std::string> validate(std::vector<std::string>* warnings = nullptr) const {
        std::vector<std::string> issues;
        if (!(length_m > 0.0)) issues.push_back("grid.line.length_m: must be > 0");
        if (!(r1_ohm_per_m > 0.0)) issues.push_back("grid.line.r1_ohm_per_m: must be > 0");
        if (!(l1_h_per_m > 0.0)) issues.push_back("grid.line.l1_h_per_m: must be > 0");
        if (!(c_e_f_per_m >= 0.0)) issues.push_back("grid.line.c_e_f_per_m: must be >= 0");
        if (!(c_l_f_per_m >= 0.0)) issues.push_back("grid.line.c_l_f_per_m: must be >= 0");
        if (!(g_e_s_per_m >= 0.0)) issues.push_back("grid.line.g_e_s_per_m: must be >= 0");
        if (!(g_l_s_per_m >= 0.0)) issues.push_back("grid.line.g_l_s_per_m: must be >= 0");
        if (!(r0_ohm_per_m >= 0.0)) issues.push_back("grid.line.r0_ohm_per_m: must be >= 0");
        if (!(l0_h_per_m >= 0.0)) issues.push_back("grid.line.l0_h_per_m: must be >= 0");
        if (warnings && issues.empty() && r0_ohm_per_m < r1_ohm_per_m) {
            warnings->push_back(
                "grid.line: r0_ohm_per_m < r1_ohm_per_m is unusual for overhead lines");
        }
        return issues;
    }

    void check() const {
        auto issues = validate();
        if (!issues.empty()) throw ValidationError(std::move(issues));
    }
};

/// The symmetric-components analysis pair: T (with the 1/3 factor) and its
/// exact inverse, T_inv = 3 conj(T).
inline std::pair<CMat3, CMat3> sequence_transform() {
    const Complex a = std::polar(1.0, TWO_PI / 3.0);   // e^{j 2pi/3}
    const Complex a2 = std::polar(1.0, 2.0 * TWO_PI / 3.0);
    const Complex third{1.0 / 3.0, 0.0};
    CMat3 t{{{third, third, third},
             {third, third * a, third * a2},
             {third, third * a2, third * a}}};
    CMat3 t_inv{{{Complex{1.0, 0.0}, Complex{1.0, 0.0}, Complex{1.0, 0.0}},
                 {Complex{1.0, 0.0}, a2, a},
                 {Complex{1.0, 0.0}, a, a2}}};
    return {t, t_inv};
}

namespace detail {

inline CVec3 multiply(const CMat3& m, const CVec3& v) {
    CVec3 r{};
    for (int i = 0; i < 3; ++i) {
        Complex s{0.0, 0.0};
        for (int j = 0; j < 3; ++j) s += m[i][j] * v[j];
        r[i] = s;
    }
    return r;
}

inline CMat3 multiply(const CMat3& x, const CMat3& y) {
    CMat3 r{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Complex s{0.0, 0.0};
            for (int k = 0; k < 3; ++k) s += x[i][k] * y[k][j];
            r[i][j] = s;
        }
    }
    return r;
}

/// Real part of T_inv * diag(d0, d1, d1) * T, with a guard on the imaginary
/// residue of the similarity transform. The result is symmetrized to an
/// exactly circulant matrix (entries agree to rounding anyway), so equal
/// positions compare equal bit for bit.
inline Mat3 sequence_to_phase(double d0, double d1) {
    const auto [t, t_inv] = sequence_transform();
    CMat3 diag{};
    diag[0][0] = d0;
    diag[1][1] = d1;
    diag[2][2] = d1;
    const CMat3 phase = multiply(multiply(t_inv, diag), t);
    const double scale = std::max({std::abs(d0), std::abs(d1), 1e-300});
    double diag_sum = 0.0, off_sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (std::abs(phase[i][j].imag()) > 1e-14 * scale) {
                throw std::logic_error(
                    "grid: sequence similarity produced a non-real phase matrix");
            }
            (i == j ? diag_sum : off_sum) += phase[i][j].real();
        }
    }
    Mat3 result;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            result.m[i][j] = (i == j) ? diag_sum / 3.0 : off_sum / 6.0;
        }
    }
    return result;
}

/// Shunt pattern: diagonal e + 2l, off-diagonal -l.
inline Mat3 shunt_pattern(double e, double l) {
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m.m[i][j] = (i == j) ? e + 2.0 * l : -l;
    }
    return m;
}

}  // namespace detail

struct PhaseMatrices {
    Mat3 inductance_h_per_m;    // L'
    Mat3 resistance_ohm_per_m;  // R'
    Mat3 capacitance_f_per_m;   // node-equation C pattern
    Mat3 conductance_s_per_m;   // node-equation G pattern
};

/// Phase-domain matrices from sequence parameters. L' and R' come out of the
/// symmetric-components similarity transform; the shunt matrices carry the
/// earth/line pattern directly.
inline PhaseMatrices phase_matrices(const LineSegmentParams& params) {
    params.check();
    PhaseMatrices m;
    m.inductance_h_per_m = detail::sequence_to_phase(params.l0_h_per_m, params.l1_h_per_m);
    m.resistance_ohm_per_m = detail::sequence_to_phase(params.r0_ohm_per_m, params.r1_ohm_per_m);
    m.capacitance_f_per_m = detail::shunt_pattern(params.c_e_f_per_m, params.c_l_f_per_m);
    m.conductance_s_per_m = detail::shunt_pattern(params.g_e_s_per_m, params.g_l_s_per_m);
    return m;
}

/// Series currents and node voltages of one segment; the node with the shunt
/// elements is the state node, currents flow from it toward the far boundary.
struct LineSegmentState {
    std::array<double, 3> i_abc{};  // [A]
    std::array<double, 3> u_abc{};  // [V]
};

struct SegmentBoundary {
    std::array<double, 3> u_far{};   // voltage at distance delta X [V]
    std::array<double, 3> i_src{};   // net current injected into the state node [A]
};

struct SegmentDerivative {
    std::array<double, 3> di_dt{};
    std::array<double, 3> du_dt{};
};

/// Transient segment with precomputed matrix inverses.
class SegmentModel {
public:
    explicit SegmentModel(const LineSegmentParams& params)
        : params_(params), matrices_(phase_matrices(params)) {
        if (!(params.c_e_f_per_m > 0.0)) {
            throw std::domain_error(
                "transient line model: c_e_f_per_m must be > 0, otherwise the node "
                "equation is algebraic (use RMS mode)");
        }
        l_inverse_ = matrices_.inductance_h_per_m.inverse();
        c_inverse_ = matrices_.capacitance_f_per_m.inverse();
    }

    const LineSegmentParams& params() const { return params_; }
    const PhaseMatrices& matrices() const { return matrices_; }

    /// di/dt = L'^-1 ((u - u_far)/dX - R' i),
    /// du/dt = C'^-1 (i_src/dX - G' u).
    SegmentDerivative derivative(const LineSegmentState& state,
                                 const SegmentBoundary& boundary) const {
        const double inv_dx = 1.0 / params_.length_m;
        SegmentDerivative d;
        std::array<double, 3> rhs_i{}, rhs_u{};
        for (int r = 0; r < 3; ++r) {
            double ri = 0.0, gu = 0.0;
            for (int c = 0; c < 3; ++c) {
                ri += matrices_.resistance_ohm_per_m.m[r][c] * state.i_abc[c];
                gu += matrices_.conductance_s_per_m.m[r][c] * state.u_abc[c];
            }
            rhs_i[r] = (state.u_abc[r] - boundary.u_far[r]) * inv_dx - ri;
            rhs_u[r] = boundary.i_src[r] * inv_dx - gu;
        }
        for (int r = 0; r < 3; ++r) {
            double di = 0.0, du = 0.0;
            for (int c = 0; c < 3; ++c) {
                di += l_inverse_.m[r][c] * rhs_i[c];
                du += c_inverse_.m[r][c] * rhs_u[c];
            }
            d.di_dt[r] = di;
            d.du_dt[r] = du;
        }
        return d;
    }

    /// Stored electromagnetic energy of the segment for a given state.
    double stored_energy(const LineSegmentState& state) const {
        double e = 0.0;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                e += 0.5 * state.i_abc[r] * matrices_.inductance_h_per_m.m[r][c] *
                     state.i_abc[c];
                e += 0.5 * state.u_abc[r] * matrices_.capacitance_f_per_m.m[r][c] *
                     state.u_abc[c];
            }
        }
        return e * params_.length_m;
    }

    /// Resistive plus shunt-conductance dissipation for a given state.
    double dissipation(const LineSegmentState& state) const {
        double p = 0.0;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                p += state.i_abc[r] * matrices_.resistance_ohm_per_m.m[r][c] *
                     state.i_abc[c];
                p += state.u_abc[r] * matrices_.conductance_s_per_m.m[r][c] *
                     state.u_abc[c];
            }
        }
        return p * params_.length_m;
    }

private:
    LineSegmentParams params_;
    PhaseMatrices matrices_;
    Mat3 l_inverse_;
    Mat3 c_inverse_;
};

/// One-shot evaluation of the segment equations (builds the cached model).
inline SegmentDerivative segment_derivative(const LineSegmentState& state,
                                            const SegmentBoundary& boundary,
                                            const LineSegmentParams& params) {
    return SegmentModel(params).derivative(state, boundary);
}

struct PhasorSolution {
    CVec3 receiving_v{};  // node voltage phasors
    CVec3 current_a{};    // series current phasors, sending toward node
};

/// Algebraic steady-state solve of the segment: per-sequence series impedance
/// (R' + jwL') dX against the node shunt admittance plus a per-phase load
/// admittance (grounded wye, equal in every sequence network).
inline PhasorSolution rms_phasor_solve(const CVec3& sending,
                                       Complex load_admittance,
                                       const LineSegmentParams& params,
                                       double f_grid) {
    params.check();
    if (!(f_grid > 0.0)) {
        throw std::domain_error("rms_phasor_solve: grid frequency must be > 0");
    }
    const double w = TWO_PI * f_grid;
    const auto [t, t_inv] = sequence_transform();
    const CVec3 send_seq = detail::multiply(t, sending);

    const std::array<Complex, 3> z_seq{
        Complex{params.r0_ohm_per_m, w * params.l0_h_per_m} * params.length_m,
        Complex{params.r1_ohm_per_m, w * params.l1_h_per_m} * params.length_m,
        Complex{params.r1_ohm_per_m, w * params.l1_h_per_m} * params.length_m};
    const Complex y_shunt0 =
        Complex{params.g_e_s_per_m, w * params.c_e_f_per_m} * params.length_m;
    const Complex y_shunt1 = Complex{params.g_e_s_per_m + 3.0 * params.g_l_s_per_m,
                                     w * (params.c_e_f_per_m + 3.0 * params.c_l_f_per_m)} *
                             params.length_m;
    const std::array<Complex, 3> y_seq{y_shunt0 + load_admittance,
                                       y_shunt1 + load_admittance,
                                       y_shunt1 + load_admittance};

    CVec3 node_seq{}, current_seq{};
    for (int s = 0; s < 3; ++s) {
        const Complex denom = Complex{1.0, 0.0} + z_seq[s] * y_seq[s];
        if (std::abs(denom) < 1e-12) {
            throw std::runtime_error("rms_phasor_solve: singular network in sequence " +
                                     std::to_string(s));
        }
        node_seq[s] = send_seq[s] / denom;
        current_seq[s] = y_seq[s] * node_seq[s];
    }
    return {detail::multiply(t_inv, node_seq), detail::multiply(t_inv, current_seq)};
}

}  // namespace wecs::grid
