// Rotor aerodynamics: tip-speed ratio and actuator-disc shaft torque from a
// cp(lambda) characteristic.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <wecs/common.hpp>

namespace wecs::aero {

/// Betz bound on the power coefficient.
inline constexpr double BETZ_LIMIT = 0.593;

struct RotorParams {
    double radius_m = 0.0;
    double air_density_kgpm3 = 0.0;
    PiecewiseLinear cp_table;  // lambda -> cp, zero outside the knot range

    RotorParams() = default;
    RotorParams(double radius, double air_density, PiecewiseLinear table)
        : radius_m(radius), air_density_kgpm3(air_density), cp_table(std::move(table)) {
        if (!(radius_m > 0.0)) {
            throw std::domain_error("RotorParams: radius must be > 0");
        }
        if (!(air_density_kgpm3 > 0.0)) {
            throw std::domain_error("RotorParams: air density must be > 0");
        }
        for (std::size_t i = 0; i < cp_table.size(); ++i) {
            if (!(cp_table.knot_x(i) >= 0.0)) {
                throw std::domain_error("RotorParams: lambda knots must be >= 0");
            }
            const double cp = cp_table.knot_y(i);
            if (!(cp >= 0.0 && cp <= BETZ_LIMIT)) {
                throw std::domain_error(
                    "RotorParams: cp must lie in [0, 0.593] (Betz bound)");
            }
        }
    }

    double swept_area() const { return PI * radius_m * radius_m; }
};

/// lambda = omega R / v; wind speed zero maps to an infinite-lambda sentinel
/// which aerodynamic_torque treats as zero torque.
inline double tip_speed_ratio(double omega, double v, const RotorParams& params) {
    if (!(v >= 0.0) || !(omega >= 0.0)) {
        throw std::domain_error("tip_speed_ratio: omega and v must be >= 0");
    }
    if (v == 0.0) return std::numeric_limits<double>::infinity();
    return omega * params.radius_m / v;
}

/// cp interpolated linearly inside the table, zero outside (stall/overspeed).
inline double power_coefficient(const RotorParams& params, double lambda) {
    if (params.cp_table.empty()) return 0.0;
    if (!std::isfinite(lambda)) return 0.0;
    if (lambda < params.cp_table.min_x() || lambda > params.cp_table.max_x()) {
        return 0.0;
    }
    return params.cp_table(lambda);
}

namespace detail {

/// cp/lambda ratio at the first knot with lambda > 0, used for the
/// standstill torque limit.
inline double startup_cp_over_lambda(const RotorParams& params) {
    for (std::size_t i = 0; i < params.cp_table.size(); ++i) {
        if (params.cp_table.knot_x(i) > 0.0) {
            return params.cp_table.knot_y(i) / params.cp_table.knot_x(i);
        }
    }
    return 0.0;
}

}  // namespace detail

/// Shaft torque from P = 1/2 rho pi R^2 cp(lambda) v^3. For omega > 0 the
/// torque is P/omega; at standstill the cp/lambda limit of the table's first
/// knot gives m = 1/2 rho pi R^3 (cp/lambda) v^2.
inline double aerodynamic_torque(double v, double omega, const RotorParams& params) {
    if (!(v >= 0.0)) {
        throw std::domain_error("aerodynamic_torque: wind speed must be >= 0");
    }
    if (v == 0.0) return 0.0;
    const double dyn = 0.5 * params.air_density_kgpm3 * params.swept_area();
    if (omega == 0.0) {
        return dyn * params.radius_m * detail::startup_cp_over_lambda(params) * v * v;
    }
    const double lambda = tip_speed_ratio(omega, v, params);
    const double power = dyn * power_coefficient(params, lambda) * v * v * v;
    return power / omega;
}

}  // namespace wecs::aero
