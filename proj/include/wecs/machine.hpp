// Dynamic asynchronous (induction) machine in the stationary two-axis frame:
// flux-linkage states, voltage equations with the rotational EMF on the
// stator-referred rotor winding, and the two-axis electromagnetic torque.
// Motor sign convention: positive torque accelerates the shaft; super-
// synchronous operation (negative slip) gives negative average torque.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include <wecs/common.hpp>

namespace wecs::machine {

struct MachineParams {
    double stator_resistance_ohm = 0.0;   // R_SS
    double rotor_resistance_ohm = 0.0;    // R_RR', stator-referred
    double stator_inductance_h = 0.0;     // L_S
    double rotor_inductance_h = 0.0;      // L_R', stator-referred
    double mutual_inductance_h = 0.0;     // L_M
    int pole_pairs = 1;                   // p

    double flux_determinant() const {
        return stator_inductance_h * rotor_inductance_h -
               mutual_inductance_h * mutual_inductance_h;
    }

    void check() const {
        if (!(stator_resistance_ohm > 0.0) || !(rotor_resistance_ohm > 0.0)) {
            throw std::domain_error("MachineParams: resistances must be > 0");
        }
        if (!(flux_determinant() > 0.0)) {
            throw std::domain_error(
                "MachineParams: L_S*L_R - L_M^2 must be > 0 (invertible flux relation)");
        }
        if (pole_pairs < 1) {
            throw std::domain_error("MachineParams: pole pairs must be >= 1");
        }
        // Condition number of the symmetric inductance block.
        const double mid = 0.5 * (stator_inductance_h + rotor_inductance_h);
        const double off = std::sqrt(
            0.25 * (stator_inductance_h - rotor_inductance_h) *
                (stator_inductance_h - rotor_inductance_h) +
            mutual_inductance_h * mutual_inductance_h);
        const double lo = mid - off;
        if (!(lo > 0.0) || (mid + off) / lo > 1e12) {
            throw std::domain_error("MachineParams: inductance matrix near-singular");
        }
    }
};

/// A two-axis (alpha, beta) quantity in the stationary frame.
struct TwoAxis {
    double alpha = 0.0;
    double beta = 0.0;
};

inline TwoAxis operator+(const TwoAxis& a, const TwoAxis& b) {
    return {a.alpha + b.alpha, a.beta + b.beta};
}
inline TwoAxis operator-(const TwoAxis& a, const TwoAxis& b) {
    return {a.alpha - b.alpha, a.beta - b.beta};
}
inline TwoAxis operator*(double s, const TwoAxis& v) {
    return {s * v.alpha, s * v.beta};
}
inline double dot(const TwoAxis& a, const TwoAxis& b) {
    return a.alpha * b.alpha + a.beta * b.beta;
}
/// 2D cross product a x b = a_alpha b_beta - a_beta b_alpha.
inline double cross(const TwoAxis& a, const TwoAxis& b) {
    return a.alpha * b.beta - a.beta * b.alpha;
}
inline double magnitude(const TwoAxis& a) { return std::sqrt(dot(a, a)); }

struct MachineState {
    TwoAxis psi_s;  // stator flux linkage [Vs]
    TwoAxis psi_r;  // rotor flux linkage, stator-referred [Vs]
};

struct MachineInputs {
    TwoAxis u_s;            // stator voltage [V]
    TwoAxis u_r;            // rotor voltage, stator-referred [V]; zero for a cage
    double omega_el = 0.0;  // electrical rotor speed p * omega_mech [rad/s]
};

struct MachineCurrents {
    TwoAxis i_s;
    TwoAxis i_r;
};

/// Invert the flux linkage relation per axis:
/// [psi_s; psi_r] = [[L_S, L_M], [L_M, L_R]] [i_s; i_r].
inline MachineCurrents currents_from_flux(const MachineState& state,
                                          const MachineParams& params) {
    const double det = params.flux_determinant();
    const double ls = params.stator_inductance_h;
    const double lr = params.rotor_inductance_h;
    const double lm = params.mutual_inductance_h;
    MachineCurrents c;
    c.i_s.alpha = (lr * state.psi_s.alpha - lm * state.psi_r.alpha) / det;
    c.i_s.beta = (lr * state.psi_s.beta - lm * state.psi_r.beta) / det;
    c.i_r.alpha = (ls * state.psi_r.alpha - lm * state.psi_s.alpha) / det;
    c.i_r.beta = (ls * state.psi_r.beta - lm * state.psi_s.beta) / det;
    return c;
}

struct MachineDerivative {
    TwoAxis dpsi_s_dt;
    TwoAxis dpsi_r_dt;
};

/// Voltage equations in the stationary frame. J is the clockwise quarter
/// turn J(x, y) = (y, -x); the -omega_el J psi_r term is the rotational EMF
/// that appears once the rotor winding is referred to the stator frame.
inline MachineDerivative machine_derivative(const MachineState& state,
                                            const MachineInputs& inputs,
                                            const MachineParams& params) {
    const MachineCurrents c = currents_from_flux(state, params);
    MachineDerivative d;
    d.dpsi_s_dt = inputs.u_s - params.stator_resistance_ohm * c.i_s;
    const TwoAxis j_psi_r{state.psi_r.beta, -state.psi_r.alpha};
    d.dpsi_r_dt = inputs.u_r - params.rotor_resistance_ohm * c.i_r -
                  inputs.omega_el * j_psi_r;
    return d;
}

/// m = (3/2) p (psi_s x i_s), the amplitude-invariant two-axis torque.
inline double electromagnetic_torque(const MachineState& state,
                                     const MachineParams& params) {
    const MachineCurrents c = currents_from_flux(state, params);
    return 1.5 * static_cast<double>(params.pole_pairs) * cross(state.psi_s, c.i_s);
}

/// Instantaneous electrical power absorbed at the stator terminals in the
/// amplitude-invariant convention.
inline double stator_power(const TwoAxis& u_s, const TwoAxis& i_s) {
    return 1.5 * dot(u_s, i_s);
}

/// Stored magnetic energy of the winding system.
inline double magnetic_energy(const MachineState& state, const MachineParams& params) {
    const MachineCurrents c = currents_from_flux(state, params);
    return 0.75 * (dot(state.psi_s, c.i_s) + dot(state.psi_r, c.i_r));
}

/// Steady-state torque from the per-phase equivalent circuit built from the
/// same parameters; u_phase_rms is the RMS phase (line-to-neutral) voltage.
/// Serves as the independent check of the dynamic model at constant slip.
inline double steady_state_torque(double slip, double u_phase_rms, double f_grid,
                                  const MachineParams& params) {
    if (!(slip >= -1.0 && slip <= 1.0)) {
        throw std::domain_error("steady_state_torque: slip must be in [-1, 1]");
    }
    if (!(f_grid > 0.0)) {
        throw std::domain_error("steady_state_torque: grid frequency must be > 0");
    }
    if (slip == 0.0) return 0.0;
    const double w = TWO_PI * f_grid;
    const std::complex<double> j{0.0, 1.0};
    const std::complex<double> z_stator =
        params.stator_resistance_ohm +
        j * w * (params.stator_inductance_h - params.mutual_inductance_h);
    const std::complex<double> z_mag = j * w * params.mutual_inductance_h;
    const std::complex<double> z_rotor =
        params.rotor_resistance_ohm / slip +
        j * w * (params.rotor_inductance_h - params.mutual_inductance_h);
    const std::complex<double> z_par = z_mag * z_rotor / (z_mag + z_rotor);
    const std::complex<double> i_s = u_phase_rms / (z_stator + z_par);
    const std::complex<double> u_gap = u_phase_rms - i_s * z_stator;
    const std::complex<double> i_r = u_gap / z_rotor;
    const double airgap_power = 3.0 * std::norm(i_r) * params.rotor_resistance_ohm / slip;
    return airgap_power * static_cast<double>(params.pole_pairs) / w;
}

/// Per-phase input admittance of the steady-state equivalent circuit at a
/// given slip; the representation of the machine in RMS grid solves. At
/// slip = 0 the rotor branch is open and only magnetizing current flows.
inline std::complex<double> steady_state_admittance(double slip, double f_grid,
                                                    const MachineParams& params) {
    if (!(f_grid > 0.0)) {
        throw std::domain_error("steady_state_admittance: grid frequency must be > 0");
    }
    const double w = TWO_PI * f_grid;
    const std::complex<double> j{0.0, 1.0};
    const std::complex<double> z_stator =
        params.stator_resistance_ohm +
        j * w * (params.stator_inductance_h - params.mutual_inductance_h);
    const std::complex<double> z_mag = j * w * params.mutual_inductance_h;
    std::complex<double> z_branch = z_mag;
    if (slip != 0.0) {
        const std::complex<double> z_rotor =
            params.rotor_resistance_ohm / slip +
            j * w * (params.rotor_inductance_h - params.mutual_inductance_h);
        z_branch = z_mag * z_rotor / (z_mag + z_rotor);
    }
    return 1.0 / (z_stator + z_branch);
}

/// Amplitude-invariant Clarke transform of instantaneous phase quantities
/// (the zero-sequence component is dropped).
inline TwoAxis abc_to_two_axis(double a, double b, double c) {
    return {(2.0 * a - b - c) / 3.0, (b - c) / std::sqrt(3.0)};
}

struct PhaseTriple {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Inverse of abc_to_two_axis for a zero-sequence-free triple.
inline PhaseTriple two_axis_to_abc(const TwoAxis& v) {
    const double half_sqrt3 = 0.5 * std::sqrt(3.0);
    return {v.alpha, -0.5 * v.alpha + half_sqrt3 * v.beta,
            -0.5 * v.alpha - half_sqrt3 * v.beta};
}

}  // namespace wecs::machine
