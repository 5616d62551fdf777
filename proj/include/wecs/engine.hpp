// Simulation engine: assembles the component models into one state-space
// system, drives it with the synthesized wind series, and integrates with
// classical fixed-step RK4. In RMS mode the grid (including the machine
// stator, represented by its steady-state equivalent admittance) is solved
// algebraically each evaluation and only the mechanical states remain in the
// state vector.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <wecs/aero.hpp>
#include <wecs/common.hpp>
#include <wecs/drivetrain.hpp>
#include <wecs/geometry.hpp>
#include <wecs/grid.hpp>
#include <wecs/machine.hpp>
#include <wecs/windfield.hpp>

namespace wecs::engine {

enum class SimulationMode { transient, rms };

struct IntegratorSettings {
    std::string method = "rk4";
    double dt_s = 0.0;
    double duration_s = 0.0;
    double output_every_s = 0.0;  // 0: every step
};

struct TurbineConfig {
    double position_x_m = 0.0;
    double position_y_m = 0.0;
    double nacelle_height_m = 0.0;
    double cone_angle_rad = 0.0;  // A_K
    aero::RotorParams rotor;
};

struct GridSourceConfig {
    double voltage_rms_v = 0.0;  // phase (line-to-neutral) RMS magnitude
    double phase_rad = 0.0;      // phase of phase a
};

struct GridConfig {
    double frequency_hz = 0.0;
    GridSourceConfig source;
    grid::LineSegmentParams line;
    std::optional<double> load_resistance_ohm;  // grounded-wye resistive load
};

struct InitialConditions {
    double rotor_delta_rad = 0.0;
    double rotor_omega_radps = 0.0;
    double generator_delta_rad = 0.0;
    double generator_omega_radps = 0.0;
};

struct Scenario {
    SimulationMode mode = SimulationMode::transient;
    std::uint64_t seed = 0;
    IntegratorSettings integrator;
    std::optional<windfield::WindFieldSpec> wind;
    std::optional<TurbineConfig> turbine;
    std::optional<double> constant_torque_nm;  // drive without a wind field
    drivetrain::InertiaParams rotor_inertia;
    std::optional<drivetrain::InertiaParams> generator_inertia;
    std::optional<drivetrain::GearboxParams> gearbox;
    std::optional<machine::MachineParams> machine_params;
    std::optional<GridConfig> grid_config;
    InitialConditions initial;
    std::vector<std::string> output_columns;
    std::vector<std::string> warnings;  // filled during validation/parse

    void validate();
};

/// Names of every output column available for a scenario's composition/mode.
inline std::vector<std::string> available_output_columns(const Scenario& sc) {
    std::vector<std::string> cols;
    const bool has_wind = sc.wind.has_value();
    const bool has_gen = sc.generator_inertia.has_value();
    const bool has_machine = sc.machine_params.has_value();
    const bool has_grid = sc.grid_config.has_value();
    const bool transient = sc.mode == SimulationMode::transient;

    if (has_wind) cols.push_back("wind.v_hub_mps");
    cols.push_back("rotor.azimuth_rad");
    cols.push_back("drivetrain.rotor.delta_rad");
    cols.push_back("drivetrain.rotor.omega_radps");
    if (has_wind) {
        cols.push_back("aero.lambda");
        cols.push_back("aero.torque_nm");
    }
    if (has_gen) {
        cols.push_back("drivetrain.generator.delta_rad");
        cols.push_back("drivetrain.generator.omega_radps");
        cols.push_back("shaft.torque1_nm");
        cols.push_back("shaft.torque2_nm");
        cols.push_back("shaft.torsion_rad");
    }
    if (has_machine) {
        cols.push_back("machine.torque_nm");
        cols.push_back("machine.slip");
        cols.push_back("machine.i_s_mag_a");
        if (transient) {
            cols.push_back("machine.i_s_alpha_a");
            cols.push_back("machine.i_s_beta_a");
            cols.push_back("machine.psi_s_alpha_vs");
            cols.push_back("machine.psi_s_beta_vs");
            cols.push_back("machine.psi_r_alpha_vs");
            cols.push_back("machine.psi_r_beta_vs");
        }
    }
    if (has_grid) {
        if (transient) {
            cols.push_back("grid.u_a_v");
            cols.push_back("grid.u_b_v");
            cols.push_back("grid.u_c_v");
            cols.push_back("grid.i_a_a");
            cols.push_back("grid.i_b_a");
            cols.push_back("grid.i_c_a");
        } else {
            cols.push_back("grid.u_node_mag_v");
            cols.push_back("grid.u_node_phase_rad");
            cols.push_back("grid.i_mag_a");
        }
    }
    return cols;
}

inline void Scenario::validate() {
    std::vector<std::string> issues;

    if (integrator.method != "rk4") {
        issues.push_back("integrator.method: only 'rk4' is supported");
    }
    if (!(integrator.dt_s > 0.0)) {
        issues.push_back("integrator.dt_s: must be > 0");
    }
    if (!(integrator.duration_s >= integrator.dt_s)) {
        issues.push_back("integrator.duration_s: must be >= dt_s");
    }
    if (integrator.output_every_s != 0.0 && integrator.dt_s > 0.0) {
        const double ratio = integrator.output_every_s / integrator.dt_s;
        if (!(ratio >= 1.0) ||
            std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio)) {
            issues.push_back(
                "integrator.output_every_s: must be a positive multiple of dt_s");
        }
    }

    if (wind.has_value() != turbine.has_value()) {
        issues.push_back("scenario: wind and turbine must be given together");
    }
    if (wind && constant_torque_nm) {
        issues.push_back("scenario: choose either a wind drive or constant_torque_nm");
    }
    if (wind) {
        try {
            wind->validate();
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
        if (wind->duration_s < integrator.duration_s) {
            issues.push_back("wind.duration_s: must cover integrator.duration_s");
        }
        if (wind->step_count() < 64) {
            issues.push_back("wind: duration_s * sample_rate_hz must give >= 64 steps");
        }
    }
    if (turbine) {
        if (!(turbine->nacelle_height_m > 0.0)) {
            issues.push_back("turbine.nacelle_height_m: must be > 0");
        }
        if (!std::isfinite(turbine->cone_angle_rad)) {
            issues.push_back("turbine.cone_angle_rad: must be finite");
        }
        if (!(turbine->rotor.radius_m > 0.0)) {
            issues.push_back("turbine.rotor.radius_m: must be > 0");
        }
        if (!(turbine->rotor.air_density_kgpm3 > 0.0)) {
            issues.push_back("turbine.rotor.air_density_kgpm3: must be > 0");
        }
        if (turbine->rotor.cp_table.empty()) {
            issues.push_back("turbine.rotor.cp_table: required");
        }
    }

    if (!(rotor_inertia.theta_kgm2 > 0.0)) {
        issues.push_back("drivetrain.rotor_inertia.theta_kgm2: must be > 0");
    }
    if (!(rotor_inertia.friction_nm_per_radps >= 0.0)) {
        issues.push_back("drivetrain.rotor_inertia.friction_nm_per_radps: must be >= 0");
    }
    if (generator_inertia.has_value() != gearbox.has_value()) {
        issues.push_back(
            "drivetrain: generator_inertia and gearbox must be given together");
    }
    if (generator_inertia) {
        if (!(generator_inertia->theta_kgm2 > 0.0)) {
            issues.push_back("drivetrain.generator_inertia.theta_kgm2: must be > 0");
        }
        if (!(generator_inertia->friction_nm_per_radps >= 0.0)) {
            issues.push_back(
                "drivetrain.generator_inertia.friction_nm_per_radps: must be >= 0");
        }
    }
    if (gearbox) {
        if (!(gearbox->stiffness_nm_per_rad >= 0.0)) {
            issues.push_back("drivetrain.gearbox.stiffness_nm_per_rad: must be >= 0");
        }
        if (!(gearbox->damping_nm_per_radps >= 0.0)) {
            issues.push_back("drivetrain.gearbox.damping_nm_per_radps: must be >= 0");
        }
        if (gearbox->ratio == 0.0 || !std::isfinite(gearbox->ratio)) {
            issues.push_back("drivetrain.gearbox.ratio: must be nonzero");
        }
    }

    if (machine_params) {
        if (!grid_config) {
            issues.push_back("machine: requires a grid section (stator terminal voltage)");
        }
        if (!generator_inertia) {
            issues.push_back("machine: requires drivetrain.generator_inertia");
        }
        try {
            machine_params->check();
        } catch (const std::exception& e) {
            issues.push_back(std::string("machine: ") + e.what());
        }
    }
    if (grid_config) {
        if (!(grid_config->frequency_hz > 0.0)) {
            issues.push_back("grid.frequency_hz: must be > 0");
        }
        if (!(grid_config->source.voltage_rms_v >= 0.0)) {
            issues.push_back("grid.source.voltage_rms_v: must be >= 0");
        }
        auto line_issues = grid_config->line.validate(&warnings);
        issues.insert(issues.end(), line_issues.begin(), line_issues.end());
        if (grid_config->load_resistance_ohm &&
            !(*grid_config->load_resistance_ohm > 0.0)) {
            issues.push_back("grid.load_resistance_ohm: must be > 0");
        }
        if (mode == SimulationMode::transient && line_issues.empty() &&
            !(grid_config->line.c_e_f_per_m > 0.0)) {
            issues.push_back(
                "grid.line.c_e_f_per_m: must be > 0 in transient mode (the node "
                "equation becomes algebraic otherwise; use mode 'rms')");
        }
    }

    const auto available = available_output_columns(*this);
    for (const auto& col : output_columns) {
        if (std::find(available.begin(), available.end(), col) == available.end()) {
            std::string msg = "outputs: unknown column '" + col + "' (available:";
            for (const auto& a : available) msg += " " + a;
            msg += ")";
            issues.push_back(std::move(msg));
        }
    }

    if (!issues.empty()) throw ValidationError(std::move(issues));
}

/// Name and offset bookkeeping for the concatenated state vector.
struct StateLayout {
    std::vector<std::string> names;
    int rotor_delta = -1, rotor_omega = -1;
    int gen_delta = -1, gen_omega = -1;
    int machine_first = -1;  // psi_s_alpha, psi_s_beta, psi_r_alpha, psi_r_beta
    int grid_first = -1;     // i_a, i_b, i_c, u_a, u_b, u_c

    std::size_t size() const { return names.size(); }
};

struct EnergyAudit {
    double aero_work_j = 0.0;
    double drive_work_j = 0.0;
    double friction_loss_j = 0.0;
    double gear_damping_loss_j = 0.0;
    double machine_copper_loss_j = 0.0;
    double line_loss_j = 0.0;
    double load_loss_j = 0.0;
    double source_absorbed_j = 0.0;
    double stored_initial_j = 0.0;
    double stored_final_j = 0.0;

    double residual_j() const {
        return aero_work_j + drive_work_j -
               (friction_loss_j + gear_damping_loss_j + machine_copper_loss_j +
                line_loss_j + load_loss_j + source_absorbed_j) -
               (stored_final_j - stored_initial_j);
    }
    double reference_j() const {
        double ref = 1e-12;
        for (double v : {aero_work_j, drive_work_j, friction_loss_j,
                         gear_damping_loss_j, machine_copper_loss_j, line_loss_j,
                         load_loss_j, source_absorbed_j,
                         stored_final_j - stored_initial_j}) {
            ref = std::max(ref, std::abs(v));
        }
        return ref;
    }
    double relative_residual() const { return residual_j() / reference_j(); }
};

struct TimeSeriesOutput {
    std::vector<std::string> columns;  // leading "t"
    std::vector<double> data;          // row-major
    std::size_t n_rows = 0;
    EnergyAudit audit;
    std::vector<std::string> state_names;
    std::vector<double> final_state;

    double value(std::size_t row, std::size_t col) const {
        return data[row * columns.size() + col];
    }
    /// Column index by name; throws if absent.
    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == name) return c;
        }
        throw std::out_of_range("TimeSeriesOutput: no column '" + name + "'");
    }
};

namespace detail {

/// One classical RK4 step of y at time t; k1..k4/tmp are caller scratch.
template <typename Deriv>
inline void rk4_step(Deriv&& f, double t, double dt, std::vector<double>& y,
                     std::vector<double>& k1, std::vector<double>& k2,
                     std::vector<double>& k3, std::vector<double>& k4,
                     std::vector<double>& tmp) {
    const std::size_t n = y.size();
    f(t, std::span<const double>(y), std::span<double>(k1));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    f(t + 0.5 * dt, std::span<const double>(tmp), std::span<double>(k2));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    f(t + 0.5 * dt, std::span<const double>(tmp), std::span<double>(k3));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    f(t + dt, std::span<const double>(tmp), std::span<double>(k4));
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

}  // namespace detail

/// Signals derivable from (t, state); the source of every output column.
struct StepSignals {
    double t = 0.0;
    double v_hub_mps = 0.0;
    double azimuth_rad = 0.0;
    double lambda = 0.0;
    double aero_torque_nm = 0.0;
    double rotor_delta_rad = 0.0;
    double rotor_omega_radps = 0.0;
    double gen_delta_rad = 0.0;
    double gen_omega_radps = 0.0;
    double shaft_torque1_nm = 0.0;
    double shaft_torque2_nm = 0.0;
    double shaft_torsion_rad = 0.0;
    double machine_torque_nm = 0.0;
    double machine_slip = 0.0;
    double i_s_alpha_a = 0.0;
    double i_s_beta_a = 0.0;
    double i_s_mag_a = 0.0;
    double psi_s_alpha_vs = 0.0;
    double psi_s_beta_vs = 0.0;
    double psi_r_alpha_vs = 0.0;
    double psi_r_beta_vs = 0.0;
    std::array<double, 3> grid_u_v{};
    std::array<double, 3> grid_i_a{};
    double rms_u_node_mag_v = 0.0;
    double rms_u_node_phase_rad = 0.0;
    double rms_i_mag_a = 0.0;
};

class Simulator {
public:
    explicit Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
        scenario_.validate();
        if (scenario_.wind) {
            wind_ = windfield::generate(*scenario_.wind);
        }
        if (scenario_.grid_config && scenario_.mode == SimulationMode::transient) {
            segment_.emplace(scenario_.grid_config->line);
        }
        build_layout();
    }

    const Scenario& scenario() const { return scenario_; }
    const StateLayout& layout() const { return layout_; }
    const std::optional<windfield::WindSeries>& wind_series() const { return wind_; }

    std::vector<double> initial_state() const {
        std::vector<double> x(layout_.size(), 0.0);
        x[layout_.rotor_delta] = scenario_.initial.rotor_delta_rad;
        x[layout_.rotor_omega] = scenario_.initial.rotor_omega_radps;
        if (layout_.gen_delta >= 0) {
            x[layout_.gen_delta] = scenario_.initial.generator_delta_rad;
            x[layout_.gen_omega] = scenario_.initial.generator_omega_radps;
        }
        return x;
    }

    /// Time derivative of the full state vector; a pure function of (t, x).
    void system_derivative(double t, std::span<const double> x,
                           std::span<double> dx) const {
        evaluate(t, x, dx, nullptr, nullptr);
    }

    std::vector<double> system_derivative(double t, std::span<const double> x) const {
        std::vector<double> dx(x.size());
        system_derivative(t, x, dx);
        return dx;
    }

    /// Signals at (t, x) for output emission.
    StepSignals signals(double t, std::span<const double> x) const {
        StepSignals sig;
        evaluate(t, x, {}, &sig, nullptr);
        return sig;
    }

    TimeSeriesOutput integrate() const;

private:
    struct PowerTerms {
        double aero = 0.0;
        double drive = 0.0;
        double friction = 0.0;
        double gear_damping = 0.0;
        double copper = 0.0;
        double line_loss = 0.0;
        double load_loss = 0.0;
        double source_absorbed = 0.0;
    };

    void build_layout() {
        auto push = [&](const std::string& n) {
            layout_.names.push_back(n);
            return static_cast<int>(layout_.names.size() - 1);
        };
        layout_.rotor_delta = push("drivetrain.rotor.delta_rad");
        layout_.rotor_omega = push("drivetrain.rotor.omega_radps");
        if (scenario_.generator_inertia) {
            layout_.gen_delta = push("drivetrain.generator.delta_rad");
            layout_.gen_omega = push("drivetrain.generator.omega_radps");
        }
        if (scenario_.machine_params && scenario_.mode == SimulationMode::transient) {
            layout_.machine_first = push("machine.psi_s_alpha_vs");
            push("machine.psi_s_beta_vs");
            push("machine.psi_r_alpha_vs");
            push("machine.psi_r_beta_vs");
        }
        if (scenario_.grid_config && scenario_.mode == SimulationMode::transient) {
            layout_.grid_first = push("grid.i_a_a");
            push("grid.i_b_a");
            push("grid.i_c_a");
            push("grid.u_a_v");
            push("grid.u_b_v");
            push("grid.u_c_v");
        }
    }

    /// Wind speed at the hub (zero-order hold, averaged over grid points).
    double hub_wind(double t) const {
        const auto& w = *wind_;
        auto idx = static_cast<std::size_t>(std::floor(t / w.dt_s));
        if (idx >= w.n_steps) {
            if (t <= scenario_.wind->duration_s * (1.0 + 1e-9)) {
                idx = w.n_steps - 1;  // right-edge hold
            } else {
                throw std::domain_error("system_derivative: t beyond wind coverage");
            }
        }
        double v = 0.0;
        for (std::size_t p = 0; p < w.n_points; ++p) v += w.at(p, idx);
        return v / static_cast<double>(w.n_points);
    }

    std::array<double, 3> source_voltage(double t) const {
        const auto& g = *scenario_.grid_config;
        const double w = TWO_PI * g.frequency_hz;
        const double amp = std::sqrt(2.0) * g.source.voltage_rms_v;
        const double ph = g.source.phase_rad;
        return {amp * std::cos(w * t + ph), amp * std::cos(w * t + ph - TWO_PI / 3.0),
                amp * std::cos(w * t + ph + TWO_PI / 3.0)};
    }

    /// Single code path for derivatives, output signals and power terms so
    /// the three views of the dynamics always agree.
    void evaluate(double t, std::span<const double> x, std::span<double> dx,
                  StepSignals* sig, PowerTerms* pw) const {
        if (t < 0.0 || t > scenario_.integrator.duration_s * (1.0 + 1e-9) +
                               scenario_.integrator.dt_s) {
            throw std::domain_error("system_derivative: t outside environment coverage");
        }
        const double delta1 = x[layout_.rotor_delta];
        const double omega1 = x[layout_.rotor_omega];
        const bool has_gen = layout_.gen_delta >= 0;
        const double delta2 = has_gen ? x[layout_.gen_delta] : 0.0;
        const double omega2 = has_gen ? x[layout_.gen_omega] : 0.0;

        // Aerodynamic or constant external drive on the rotor inertia. The
        // frame rotations preserve the speed magnitude, so the hub speed
        // feeds the cp characteristic directly.
        double m_aero = 0.0, m_drive = 0.0, v_hub = 0.0, lambda = 0.0;
        if (scenario_.wind) {
            v_hub = hub_wind(t);
            const auto& rotor = scenario_.turbine->rotor;
            const double v = std::max(0.0, v_hub);
            const double omega = std::max(0.0, omega1);
            m_aero = aero::aerodynamic_torque(v, omega, rotor);
            lambda = aero::tip_speed_ratio(omega, v, rotor);
        } else if (scenario_.constant_torque_nm) {
            m_drive = *scenario_.constant_torque_nm;
        }

        // Shaft/gearbox coupling torques.
        double m1 = 0.0, m2 = 0.0, torsion = 0.0, torsion_rate = 0.0;
        if (scenario_.gearbox) {
            const auto& gb = *scenario_.gearbox;
            torsion = delta1 - delta2 / gb.ratio;
            torsion_rate = omega1 - omega2 / gb.ratio;
            const auto torques = drivetrain::gearbox_torques(
                {delta1, delta2, omega1, omega2}, gb);
            m1 = torques.m1_nm;
            m2 = torques.m2_nm;
        }

        // Machine electromagnetic torque and electrical derivatives.
        double m_machine = 0.0, slip = 0.0;
        machine::MachineCurrents currents{};
        machine::MachineState mstate{};
        grid::PhasorSolution rms_solution{};
        std::complex<double> rms_machine_current{0.0, 0.0};
        const bool transient = scenario_.mode == SimulationMode::transient;
        if (scenario_.machine_params) {
            const auto& mp = *scenario_.machine_params;
            const double w_grid = TWO_PI * scenario_.grid_config->frequency_hz;
            slip = 1.0 - static_cast<double>(mp.pole_pairs) * omega2 / w_grid;
            if (transient) {
                mstate.psi_s = {x[layout_.machine_first], x[layout_.machine_first + 1]};
                mstate.psi_r = {x[layout_.machine_first + 2], x[layout_.machine_first + 3]};
                currents = machine::currents_from_flux(mstate, mp);
                m_machine = machine::electromagnetic_torque(mstate, mp);
            } else {
                const double s = std::clamp(slip, -1.0, 1.0);
                rms_solution = solve_rms_network(s, &rms_machine_current);
                const double u_mag =
                    std::abs(positive_sequence(rms_solution.receiving_v));
                m_machine = machine::steady_state_torque(
                    s, u_mag, scenario_.grid_config->frequency_hz, mp);
            }
        } else if (scenario_.grid_config && !transient) {
            rms_solution = solve_rms_network(0.0, nullptr);
        }

        // Mechanical derivatives: rotor gets drive + port-1 torque, the
        // generator mass gets port-2 plus the electromagnetic torque.
        const auto d1 = drivetrain::inertia_derivative(
            {delta1, omega1}, m_aero + m_drive + m1, scenario_.rotor_inertia);
        if (!dx.empty()) {
            dx[layout_.rotor_delta] = d1.ddelta_dt;
            dx[layout_.rotor_omega] = d1.domega_dt;
        }
        if (has_gen) {
            const auto d2 = drivetrain::inertia_derivative(
                {delta2, omega2}, m2 + m_machine, *scenario_.generator_inertia);
            if (!dx.empty()) {
                dx[layout_.gen_delta] = d2.ddelta_dt;
                dx[layout_.gen_omega] = d2.domega_dt;
            }
        }

        // Electrical derivatives (transient mode).
        std::array<double, 3> u_node{}, i_line{}, u_src{};
        if (transient && scenario_.grid_config) {
            for (int r = 0; r < 3; ++r) {
                i_line[r] = x[layout_.grid_first + r];
                u_node[r] = x[layout_.grid_first + 3 + r];
            }
            u_src = source_voltage(t);

            machine::PhaseTriple i_machine{};
            if (scenario_.machine_params) {
                const machine::TwoAxis u_s =
                    machine::abc_to_two_axis(u_node[0], u_node[1], u_node[2]);
                const machine::MachineInputs inputs{
                    u_s, {0.0, 0.0},
                    static_cast<double>(scenario_.machine_params->pole_pairs) * omega2};
                const auto md =
                    machine::machine_derivative(mstate, inputs, *scenario_.machine_params);
                if (!dx.empty()) {
                    dx[layout_.machine_first] = md.dpsi_s_dt.alpha;
                    dx[layout_.machine_first + 1] = md.dpsi_s_dt.beta;
                    dx[layout_.machine_first + 2] = md.dpsi_r_dt.alpha;
                    dx[layout_.machine_first + 3] = md.dpsi_r_dt.beta;
                }
                i_machine = machine::two_axis_to_abc(currents.i_s);
            }

            std::array<double, 3> i_src{};
            const double g_load = scenario_.grid_config->load_resistance_ohm
                                      ? 1.0 / *scenario_.grid_config->load_resistance_ohm
                                      : 0.0;
            std::array<double, 3> i_mach_arr{i_machine.a, i_machine.b, i_machine.c};
            for (int r = 0; r < 3; ++r) {
                i_src[r] = -i_line[r] - i_mach_arr[r] - g_load * u_node[r];
            }
            const auto gd = segment_->derivative({i_line, u_node}, {u_src, i_src});
            if (!dx.empty()) {
                for (int r = 0; r < 3; ++r) {
                    dx[layout_.grid_first + r] = gd.di_dt[r];
                    dx[layout_.grid_first + 3 + r] = gd.du_dt[r];
                }
            }
        }

        if (sig) {
            sig->t = t;
            sig->v_hub_mps = v_hub;
            sig->azimuth_rad = geometry::wrap_angle(delta1);
            sig->lambda = std::isfinite(lambda) ? lambda : 0.0;
            sig->aero_torque_nm = m_aero;
            sig->rotor_delta_rad = delta1;
            sig->rotor_omega_radps = omega1;
            sig->gen_delta_rad = delta2;
            sig->gen_omega_radps = omega2;
            sig->shaft_torque1_nm = m1;
            sig->shaft_torque2_nm = m2;
            sig->shaft_torsion_rad = torsion;
            sig->machine_torque_nm = m_machine;
            sig->machine_slip = slip;
            if (scenario_.machine_params && transient) {
                sig->i_s_alpha_a = currents.i_s.alpha;
                sig->i_s_beta_a = currents.i_s.beta;
                sig->i_s_mag_a = machine::magnitude(currents.i_s);
                sig->psi_s_alpha_vs = mstate.psi_s.alpha;
                sig->psi_s_beta_vs = mstate.psi_s.beta;
                sig->psi_r_alpha_vs = mstate.psi_r.alpha;
                sig->psi_r_beta_vs = mstate.psi_r.beta;
            }
            if (scenario_.machine_params && !transient) {
                sig->i_s_mag_a = std::sqrt(2.0) * std::abs(rms_machine_current);
            }
            sig->grid_u_v = u_node;
            sig->grid_i_a = i_line;
            if (!transient && scenario_.grid_config) {
                const auto u_pos = positive_sequence(rms_solution.receiving_v);
                const auto i_pos = positive_sequence(rms_solution.current_a);
                sig->rms_u_node_mag_v = std::abs(u_pos);
                sig->rms_u_node_phase_rad = std::arg(u_pos);
                sig->rms_i_mag_a = std::abs(i_pos);
            }
        }

        if (pw) {
            pw->aero = m_aero * omega1;
            pw->drive = m_drive * omega1;
            pw->friction =
                scenario_.rotor_inertia.friction_nm_per_radps * omega1 * omega1;
            if (has_gen) {
                pw->friction += scenario_.generator_inertia->friction_nm_per_radps *
                                omega2 * omega2;
            }
            if (scenario_.gearbox) {
                pw->gear_damping =
                    scenario_.gearbox->damping_nm_per_radps * torsion_rate * torsion_rate;
            }
            if (transient) {
                if (scenario_.machine_params) {
                    const auto& mp = *scenario_.machine_params;
                    pw->copper = 1.5 * (mp.stator_resistance_ohm *
                                            machine::dot(currents.i_s, currents.i_s) +
                                        mp.rotor_resistance_ohm *
                                            machine::dot(currents.i_r, currents.i_r));
                }
                if (scenario_.grid_config) {
                    pw->line_loss = segment_->dissipation({i_line, u_node});
                    const double g_load =
                        scenario_.grid_config->load_resistance_ohm
                            ? 1.0 / *scenario_.grid_config->load_resistance_ohm
                            : 0.0;
                    for (int r = 0; r < 3; ++r) {
                        pw->load_loss += g_load * u_node[r] * u_node[r];
                        pw->source_absorbed += u_src[r] * i_line[r];
                    }
                }
            } else if (scenario_.grid_config) {
                accumulate_rms_powers(rms_solution, rms_machine_current, slip, pw);
            }
        }
    }

    static std::complex<double> positive_sequence(const grid::CVec3& phasors) {
        const auto [t, t_inv] = grid::sequence_transform();
        std::complex<double> s{0.0, 0.0};
        for (int j = 0; j < 3; ++j) s += t[1][j] * phasors[j];
        return s;
    }

    /// Algebraic network solve for RMS mode: the machine joins the node as
    /// its steady-state equivalent admittance (positive sequence carries the
    /// balanced source, so adding it to every sequence is inert).
    grid::PhasorSolution solve_rms_network(double slip,
                                           std::complex<double>* machine_current) const {
        const auto& g = *scenario_.grid_config;
        std::complex<double> y_load{0.0, 0.0};
        if (g.load_resistance_ohm) y_load = 1.0 / *g.load_resistance_ohm;
        std::complex<double> y_machine{0.0, 0.0};
        if (scenario_.machine_params) {
            y_machine = machine::steady_state_admittance(slip, g.frequency_hz,
                                                         *scenario_.machine_params);
        }
        const std::complex<double> a = std::polar(1.0, TWO_PI / 3.0);
        const std::complex<double> u0 = std::polar(g.source.voltage_rms_v,
                                                   g.source.phase_rad);
        const grid::CVec3 sending{u0, u0 * a * a, u0 * a};
        auto sol = grid::rms_phasor_solve(sending, y_load + y_machine, g.line,
                                          g.frequency_hz);
        if (machine_current) {
            *machine_current = y_machine * positive_sequence(sol.receiving_v);
        }
        return sol;
    }

    void accumulate_rms_powers(const grid::PhasorSolution& sol,
                               std::complex<double> machine_current, double slip,
                               PowerTerms* pw) const {
        const auto& g = *scenario_.grid_config;
        const auto [t, t_inv] = grid::sequence_transform();
        const std::complex<double> a = std::polar(1.0, TWO_PI / 3.0);
        const std::complex<double> u0 = std::polar(g.source.voltage_rms_v,
                                                   g.source.phase_rad);
        const grid::CVec3 sending{u0, u0 * a * a, u0 * a};
        // The solved current is oriented source -> node; the audit counts
        // power absorbed by the source, hence the sign flip.
        for (int r = 0; r < 3; ++r) {
            pw->source_absorbed -= std::real(sending[r] * std::conj(sol.current_a[r]));
        }
        const double w = TWO_PI * g.frequency_hz;
        for (int s = 0; s < 3; ++s) {
            std::complex<double> i_seq{0.0, 0.0}, u_seq{0.0, 0.0};
            for (int j = 0; j < 3; ++j) {
                i_seq += t[s][j] * sol.current_a[j];
                u_seq += t[s][j] * sol.receiving_v[j];
            }
            const double r_seq =
                (s == 0) ? g.line.r0_ohm_per_m : g.line.r1_ohm_per_m;
            const double g_seq = (s == 0)
                                     ? g.line.g_e_s_per_m
                                     : g.line.g_e_s_per_m + 3.0 * g.line.g_l_s_per_m;
            pw->line_loss += 3.0 * std::norm(i_seq) * r_seq * g.line.length_m;
            pw->line_loss += 3.0 * std::norm(u_seq) * g_seq * g.line.length_m;
            if (g.load_resistance_ohm) {
                pw->load_loss += 3.0 * std::norm(u_seq) / *g.load_resistance_ohm;
            }
        }
        if (scenario_.machine_params) {
            const auto& mp = *scenario_.machine_params;
            const double s_cl = std::clamp(slip, -1.0, 1.0);
            const std::complex<double> u_pos = positive_sequence(sol.receiving_v);
            // Circuit currents at the solved terminal voltage.
            const std::complex<double> j{0.0, 1.0};
            const std::complex<double> z_stator =
                mp.stator_resistance_ohm +
                j * w * (mp.stator_inductance_h - mp.mutual_inductance_h);
            const std::complex<double> u_gap = u_pos - machine_current * z_stator;
            std::complex<double> i_rotor{0.0, 0.0};
            if (s_cl != 0.0) {
                const std::complex<double> z_rotor =
                    mp.rotor_resistance_ohm / s_cl +
                    j * w * (mp.rotor_inductance_h - mp.mutual_inductance_h);
                i_rotor = u_gap / z_rotor;
            }
            pw->copper = 3.0 * (std::norm(machine_current) * mp.stator_resistance_ohm +
                                std::norm(i_rotor) * mp.rotor_resistance_ohm);
        }
    }

    /// Output-column extractor by name; names were validated in the scenario.
    std::function<double(const StepSignals&)> column_getter(const std::string& name) const;

    /// Total stored energy (mechanical + magnetic + line electromagnetic).
    double stored_energy(std::span<const double> x) const {
        double e = 0.5 * scenario_.rotor_inertia.theta_kgm2 *
                   x[layout_.rotor_omega] * x[layout_.rotor_omega];
        if (layout_.gen_delta >= 0) {
            e += 0.5 * scenario_.generator_inertia->theta_kgm2 * x[layout_.gen_omega] *
                 x[layout_.gen_omega];
            if (scenario_.gearbox) {
                const double eps =
                    x[layout_.rotor_delta] - x[layout_.gen_delta] / scenario_.gearbox->ratio;
                e += 0.5 * scenario_.gearbox->stiffness_nm_per_rad * eps * eps;
            }
        }
        if (layout_.machine_first >= 0) {
            machine::MachineState ms;
            ms.psi_s = {x[layout_.machine_first], x[layout_.machine_first + 1]};
            ms.psi_r = {x[layout_.machine_first + 2], x[layout_.machine_first + 3]};
            e += machine::magnetic_energy(ms, *scenario_.machine_params);
        }
        if (layout_.grid_first >= 0) {
            grid::LineSegmentState gs;
            for (int r = 0; r < 3; ++r) {
                gs.i_abc[r] = x[layout_.grid_first + r];
                gs.u_abc[r] = x[layout_.grid_first + 3 + r];
            }
            e += segment_->stored_energy(gs);
        }
        return e;
    }

    Scenario scenario_;
    std::optional<windfield::WindSeries> wind_;
    std::optional<grid::SegmentModel> segment_;
    StateLayout layout_;
};

inline TimeSeriesOutput Simulator::integrate() const {
    const auto& integ = scenario_.integrator;
    const auto n_steps = static_cast<std::size_t>(
        std::llround(integ.duration_s / integ.dt_s));
    const std::size_t stride =
        integ.output_every_s > 0.0
            ? static_cast<std::size_t>(std::llround(integ.output_every_s / integ.dt_s))
            : 1;

    TimeSeriesOutput out;
    out.columns.push_back("t");
    for (const auto& c : scenario_.output_columns) out.columns.push_back(c);
    out.state_names = layout_.names;

    // Column extractors resolved once.
    std::vector<std::function<double(const StepSignals&)>> getters;
    for (const auto& c : scenario_.output_columns) {
        getters.push_back(column_getter(c));
    }

    std::vector<double> x = initial_state();
    const std::size_t dim = x.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

    auto deriv = [this](double t, std::span<const double> y, std::span<double> dy) {
        evaluate(t, y, dy, nullptr, nullptr);
    };

    auto emit = [&](double t) {
        const StepSignals sig = signals(t, x);
        out.data.push_back(t);
        for (const auto& g : getters) out.data.push_back(g(sig));
        ++out.n_rows;
    };

    out.audit.stored_initial_j = stored_energy(x);
    PowerTerms prev{};
    evaluate(0.0, x, {}, nullptr, &prev);
    emit(0.0);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * integ.dt_s;
        detail::rk4_step(deriv, t, integ.dt_s, x, k1, k2, k3, k4, tmp);
        for (std::size_t i = 0; i < dim; ++i) {
            if (!std::isfinite(x[i])) {
                throw NumericalError("non-finite state", k + 1, layout_.names[i]);
            }
        }
        const double t_next = static_cast<double>(k + 1) * integ.dt_s;
        PowerTerms now{};
        evaluate(t_next, x, {}, nullptr, &now);
        const double h = 0.5 * integ.dt_s;
        out.audit.aero_work_j += h * (prev.aero + now.aero);
        out.audit.drive_work_j += h * (prev.drive + now.drive);
        out.audit.friction_loss_j += h * (prev.friction + now.friction);
        out.audit.gear_damping_loss_j += h * (prev.gear_damping + now.gear_damping);
        out.audit.machine_copper_loss_j += h * (prev.copper + now.copper);
        out.audit.line_loss_j += h * (prev.line_loss + now.line_loss);
        out.audit.load_loss_j += h * (prev.load_loss + now.load_loss);
        out.audit.source_absorbed_j += h * (prev.source_absorbed + now.source_absorbed);
        prev = now;

        if ((k + 1) % stride == 0 || k + 1 == n_steps) emit(t_next);
    }

    out.audit.stored_final_j = stored_energy(x);
    out.final_state = x;
    return out;
}

inline std::function<double(const StepSignals&)> Simulator::column_getter(
    const std::string& name) const {
    using Getter = std::function<double(const StepSignals&)>;
    static const std::vector<std::pair<std::string, Getter>> table = {
        {"wind.v_hub_mps", [](const StepSignals& s) { return s.v_hub_mps; }},
        {"rotor.azimuth_rad", [](const StepSignals& s) { return s.azimuth_rad; }},
        {"aero.lambda", [](const StepSignals& s) { return s.lambda; }},
        {"aero.torque_nm", [](const StepSignals& s) { return s.aero_torque_nm; }},
        {"drivetrain.rotor.delta_rad",
         [](const StepSignals& s) { return s.rotor_delta_rad; }},
        {"drivetrain.rotor.omega_radps",
         [](const StepSignals& s) { return s.rotor_omega_radps; }},
        {"drivetrain.generator.delta_rad",
         [](const StepSignals& s) { return s.gen_delta_rad; }},
        {"drivetrain.generator.omega_radps",
         [](const StepSignals& s) { return s.gen_omega_radps; }},
        {"shaft.torque1_nm", [](const StepSignals& s) { return s.shaft_torque1_nm; }},
        {"shaft.torque2_nm", [](const StepSignals& s) { return s.shaft_torque2_nm; }},
        {"shaft.torsion_rad", [](const StepSignals& s) { return s.shaft_torsion_rad; }},
        {"machine.torque_nm", [](const StepSignals& s) { return s.machine_torque_nm; }},
        {"machine.slip", [](const StepSignals& s) { return s.machine_slip; }},
        {"machine.i_s_mag_a", [](const StepSignals& s) { return s.i_s_mag_a; }},
        {"machine.i_s_alpha_a", [](const StepSignals& s) { return s.i_s_alpha_a; }},
        {"machine.i_s_beta_a", [](const StepSignals& s) { return s.i_s_beta_a; }},
        {"machine.psi_s_alpha_vs", [](const StepSignals& s) { return s.psi_s_alpha_vs; }},
        {"machine.psi_s_beta_vs", [](const StepSignals& s) { return s.psi_s_beta_vs; }},
        {"machine.psi_r_alpha_vs", [](const StepSignals& s) { return s.psi_r_alpha_vs; }},
        {"machine.psi_r_beta_vs", [](const StepSignals& s) { return s.psi_r_beta_vs; }},
        {"grid.u_a_v", [](const StepSignals& s) { return s.grid_u_v[0]; }},
        {"grid.u_b_v", [](const StepSignals& s) { return s.grid_u_v[1]; }},
        {"grid.u_c_v", [](const StepSignals& s) { return s.grid_u_v[2]; }},
        {"grid.i_a_a", [](const StepSignals& s) { return s.grid_i_a[0]; }},
        {"grid.i_b_a", [](const StepSignals& s) { return s.grid_i_a[1]; }},
        {"grid.i_c_a", [](const StepSignals& s) { return s.grid_i_a[2]; }},
        {"grid.u_node_mag_v", [](const StepSignals& s) { return s.rms_u_node_mag_v; }},
        {"grid.u_node_phase_rad",
         [](const StepSignals& s) { return s.rms_u_node_phase_rad; }},
        {"grid.i_mag_a", [](const StepSignals& s) { return s.rms_i_mag_a; }},
    };
    for (const auto& [n, g] : table) {
        if (n == name) return g;
    }
    throw std::out_of_range("Simulator: no output column '" + name + "'");
}

/// Parse-and-validate convenience wrapper used by tests and tools.
inline TimeSeriesOutput integrate(const Scenario& scenario) {
    return Simulator(scenario).integrate();
}

}  // namespace wecs::engine
