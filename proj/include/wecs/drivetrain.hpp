// Drivetrain mechanics: rigid rotating inertia with viscous friction and the
// elastic shaft/gearbox coupling between the rotor and generator masses.
#pragma once

#include <cmath>
#include <stdexcept>

namespace wecs::drivetrain {

struct InertiaParams {
    double theta_kgm2 = 0.0;          // rotating inertia
    double friction_nm_per_radps = 0.0;  // viscous friction factor k_f

    void check() const {
        if (!(theta_kgm2 > 0.0)) {
            throw std::domain_error("InertiaParams: theta must be > 0");
        }
        if (!(friction_nm_per_radps >= 0.0)) {
            throw std::domain_error("InertiaParams: friction factor must be >= 0");
        }
    }
};

struct InertiaState {
    double delta_rad = 0.0;
    double omega_radps = 0.0;  // d(delta)/dt
};

struct InertiaDerivative {
    double ddelta_dt = 0.0;
    double domega_dt = 0.0;
};

/// theta * domega/dt = -k_f * omega + sum of shaft torques.
inline InertiaDerivative inertia_derivative(const InertiaState& state,
                                            double torque_sum,
                                            const InertiaParams& params) {
    params.check();
    return {state.omega_radps,
            (-params.friction_nm_per_radps * state.omega_radps + torque_sum) /
                params.theta_kgm2};
}

struct GearboxParams {
    double stiffness_nm_per_rad = 0.0;   // c
    double damping_nm_per_radps = 0.0;   // d
    double ratio = 1.0;                  // n, high-speed over low-speed

    void check() const {
        if (!(stiffness_nm_per_rad >= 0.0)) {
            throw std::domain_error("GearboxParams: stiffness must be >= 0");
        }
        if (!(damping_nm_per_radps >= 0.0)) {
            throw std::domain_error("GearboxParams: damping must be >= 0");
        }
        if (ratio == 0.0 || !std::isfinite(ratio)) {
            throw std::domain_error("GearboxParams: ratio must be nonzero");
        }
    }
};

/// Angles/speeds at the two shaft ports; port 1 is the low-speed (rotor)
/// side, port 2 the high-speed (generator) side.
struct ShaftPortState {
    double delta1_rad = 0.0;
    double delta2_rad = 0.0;
    double omega1_radps = 0.0;
    double omega2_radps = 0.0;
};

struct ShaftTorques {
    double m1_nm = 0.0;
    double m2_nm = 0.0;
};

/// Spring-damper coupling over the gear. With torsion eps = delta1 - delta2/n:
/// m1 = -(c eps + d deps/dt), m2 = -m1/n, so m1 + n m2 = 0 identically and an
/// undamped gear transmits power losslessly.
inline ShaftTorques gearbox_torques(const ShaftPortState& state,
                                    const GearboxParams& params) {
    params.check();
    const double n = params.ratio;
    const double eps = state.delta1_rad - state.delta2_rad / n;
    const double eps_dot = state.omega1_radps - state.omega2_radps / n;
    const double m1 = -(params.stiffness_nm_per_rad * eps +
                        params.damping_nm_per_radps * eps_dot);
    return {m1, -m1 / n};
}

struct TwoMassDerivative {
    InertiaDerivative mass1;
    InertiaDerivative mass2;
};

/// Two inertias coupled by the shaft/gearbox; each mass receives its external
/// torque plus its gearbox port torque.
inline TwoMassDerivative two_mass_step(const InertiaState& state1,
                                       const InertiaState& state2,
                                       const InertiaParams& params1,
                                       const InertiaParams& params2,
                                       const GearboxParams& shaft,
                                       double external1_nm, double external2_nm) {
    const ShaftPortState ports{state1.delta_rad, state2.delta_rad,
                               state1.omega_radps, state2.omega_radps};
    const ShaftTorques m = gearbox_torques(ports, shaft);
    return {inertia_derivative(state1, external1_nm + m.m1_nm, params1),
            inertia_derivative(state2, external2_nm + m.m2_nm, params2)};
}

}  // namespace wecs::drivetrain
