#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <wecs/machine.hpp>

#include "oracles.hpp"

using namespace wecs::machine;

namespace {

/// 400 V / 50 Hz / 225 kW class cage machine, stator-referred.
MachineParams test_machine() {
    MachineParams p;
    p.stator_resistance_ohm = 0.0141;
    p.rotor_resistance_ohm = 0.0176;
    p.stator_inductance_h = 6.91e-3;
    p.rotor_inductance_h = 6.91e-3;
    p.mutual_inductance_h = 6.73e-3;
    p.pole_pairs = 2;
    return p;
}

struct DynamicRun {
    double mean_torque = 0.0;
    double final_torque = 0.0;
    MachineState state;
    double elec_in_j = 0.0;
    double copper_loss_j = 0.0;
    double mech_out_j = 0.0;
    double magnetic_initial_j = 0.0;
    double magnetic_final_j = 0.0;
};

/// Integrate the machine at constant electrical speed under a balanced
/// sinusoidal stator voltage of two-axis amplitude `u_peak`.
DynamicRun run_constant_slip(const MachineParams& params, double slip, double u_peak,
                             double f_grid, double t_end, double dt,
                             double average_from) {
    const double w = wecs::TWO_PI * f_grid;
    const double omega_el = (1.0 - slip) * w;
    DynamicRun run;
    std::vector<double> y{0.0, 0.0, 0.0, 0.0};  // psi_s, psi_r

    auto inputs_at = [&](double t) {
        MachineInputs in;
        in.u_s = {u_peak * std::cos(w * t), u_peak * std::sin(w * t)};
        in.u_r = {0.0, 0.0};
        in.omega_el = omega_el;
        return in;
    };
    auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& d) {
        const MachineState st{{s[0], s[1]}, {s[2], s[3]}};
        const auto md = machine_derivative(st, inputs_at(t), params);
        d[0] = md.dpsi_s_dt.alpha;
        d[1] = md.dpsi_s_dt.beta;
        d[2] = md.dpsi_r_dt.alpha;
        d[3] = md.dpsi_r_dt.beta;
    };

    run.magnetic_initial_j = 0.0;
    const auto steps = static_cast<std::size_t>(t_end / dt);
    double torque_sum = 0.0;
    std::size_t torque_count = 0;
    double prev_p_in = 0.0, prev_p_cu = 0.0, prev_p_mech = 0.0;
    bool have_prev = false;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const MachineState st{{y[0], y[1]}, {y[2], y[3]}};
        const auto cur = currents_from_flux(st, params);
        const auto in = inputs_at(t);
        const double m = electromagnetic_torque(st, params);
        const double p_in = stator_power(in.u_s, cur.i_s);
        const double p_cu =
            1.5 * (params.stator_resistance_ohm * dot(cur.i_s, cur.i_s) +
                   params.rotor_resistance_ohm * dot(cur.i_r, cur.i_r));
        const double p_mech = m * omega_el / params.pole_pairs;
        if (have_prev) {
            run.elec_in_j += 0.5 * dt * (prev_p_in + p_in);
            run.copper_loss_j += 0.5 * dt * (prev_p_cu + p_cu);
            run.mech_out_j += 0.5 * dt * (prev_p_mech + p_mech);
        }
        prev_p_in = p_in;
        prev_p_cu = p_cu;
        prev_p_mech = p_mech;
        have_prev = true;
        if (t >= average_from) {
            torque_sum += m;
            ++torque_count;
        }
        oracles::rk4(rhs, y, t, dt, 1);
    }
    run.state = {{y[0], y[1]}, {y[2], y[3]}};
    run.final_torque = electromagnetic_torque(run.state, params);
    run.mean_torque = torque_sum / static_cast<double>(torque_count);
    run.magnetic_final_j = magnetic_energy(run.state, params);
    // Account for the final partial powers with one more trapezoid slice.
    const MachineState st = run.state;
    const auto cur = currents_from_flux(st, params);
    const auto in = inputs_at(t_end);
    run.elec_in_j += 0.5 * dt * (prev_p_in + stator_power(in.u_s, cur.i_s));
    run.copper_loss_j +=
        0.5 * dt *
        (prev_p_cu + 1.5 * (params.stator_resistance_ohm * dot(cur.i_s, cur.i_s) +
                            params.rotor_resistance_ohm * dot(cur.i_r, cur.i_r)));
    run.mech_out_j += 0.5 * dt *
                      (prev_p_mech + electromagnetic_torque(st, params) * omega_el /
                                         params.pole_pairs);
    return run;
}

}  // namespace

TEST_CASE("parameter invariants") {
    MachineParams p = test_machine();
    p.check();

    p.mutual_inductance_h = 7.0e-3;  // L_M^2 > L_S L_R
    CHECK_THROWS_AS(p.check(), std::domain_error);

    p = test_machine();
    p.stator_resistance_ohm = 0.0;
    CHECK_THROWS_AS(p.check(), std::domain_error);

    p = test_machine();
    p.pole_pairs = 0;
    CHECK_THROWS_AS(p.check(), std::domain_error);

    // Near-singular inductance block trips the condition-number guard.
    p = test_machine();
    p.stator_inductance_h = 1.0;
    p.rotor_inductance_h = 1.0;
    p.mutual_inductance_h = 1.0 - 1e-14;
    CHECK_THROWS_AS(p.check(), std::domain_error);
}

TEST_CASE("currents from flux") {
    MachineParams p = test_machine();

    SECTION("zero flux gives zero current") {
        const auto c = currents_from_flux({{0, 0}, {0, 0}}, p);
        CHECK(c.i_s.alpha == 0.0);
        CHECK(c.i_r.beta == 0.0);
    }
    SECTION("decoupled windings with zero mutual inductance") {
        p.mutual_inductance_h = 0.0;
        const auto c = currents_from_flux({{1.0, 2.0}, {3.0, 4.0}}, p);
        CHECK(c.i_s.alpha == Catch::Approx(1.0 / p.stator_inductance_h));
        CHECK(c.i_s.beta == Catch::Approx(2.0 / p.stator_inductance_h));
        CHECK(c.i_r.alpha == Catch::Approx(3.0 / p.rotor_inductance_h));
        CHECK(c.i_r.beta == Catch::Approx(4.0 / p.rotor_inductance_h));
    }
    SECTION("matches a dense linear solve") {
        p.stator_inductance_h = 0.21;
        p.rotor_inductance_h = 0.21;
        p.mutual_inductance_h = 0.20;
        const MachineState st{{1.0, 0.0}, {0.9, 0.0}};
        const auto c = currents_from_flux(st, p);
        const auto x = oracles::solve({{0.21, 0.20}, {0.20, 0.21}}, {1.0, 0.9});
        CHECK(c.i_s.alpha == Catch::Approx(x[0]).epsilon(1e-12));
        CHECK(c.i_r.alpha == Catch::Approx(x[1]).epsilon(1e-12));
        CHECK(c.i_s.beta == 0.0);
    }
}

TEST_CASE("flux current bijection") {
    const MachineParams p = test_machine();
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const MachineState st{{dist(rng), dist(rng)}, {dist(rng), dist(rng)}};
        const auto c = currents_from_flux(st, p);
        const double psi_s_alpha = p.stator_inductance_h * c.i_s.alpha +
                                   p.mutual_inductance_h * c.i_r.alpha;
        const double psi_r_beta = p.mutual_inductance_h * c.i_s.beta +
                                  p.rotor_inductance_h * c.i_r.beta;
        const double scale = std::max(
            {std::abs(st.psi_s.alpha), std::abs(st.psi_r.beta), 1e-30});
        CHECK(std::abs(psi_s_alpha - st.psi_s.alpha) <= 1e-10 * scale);
        CHECK(std::abs(psi_r_beta - st.psi_r.beta) <= 1e-10 * scale);
    }
}

TEST_CASE("machine derivative basics") {
    const MachineParams p = test_machine();
    SECTION("all zero") {
        const auto d = machine_derivative({{0, 0}, {0, 0}}, {{0, 0}, {0, 0}, 0.0}, p);
        CHECK(d.dpsi_s_dt.alpha == 0.0);
        CHECK(d.dpsi_r_dt.beta == 0.0);
    }
    SECTION("pure voltage integration at zero flux") {
        const auto d = machine_derivative({{0, 0}, {0, 0}},
                                          {{100.0, 0.0}, {0, 0}, 314.0}, p);
        CHECK(d.dpsi_s_dt.alpha == Catch::Approx(100.0));
        CHECK(d.dpsi_s_dt.beta == 0.0);
    }
    SECTION("slip-ring rotor voltage enters the rotor flux derivative") {
        const auto d = machine_derivative({{0, 0}, {0, 0}},
                                          {{0, 0}, {5.0, -2.0}, 100.0}, p);
        CHECK(d.dpsi_r_dt.alpha == Catch::Approx(5.0));
        CHECK(d.dpsi_r_dt.beta == Catch::Approx(-2.0));
    }
}

TEST_CASE("locked rotor DC steady state satisfies u = R i") {
    MachineParams p = test_machine();
    p.stator_resistance_ohm = 0.5;
    p.rotor_resistance_ohm = 0.6;
    p.stator_inductance_h = 0.21;
    p.rotor_inductance_h = 0.21;
    p.mutual_inductance_h = 0.20;

    std::vector<double> y{0.0, 0.0, 0.0, 0.0};
    auto rhs = [&](double, const std::vector<double>& s, std::vector<double>& d) {
        const MachineState st{{s[0], s[1]}, {s[2], s[3]}};
        const auto md = machine_derivative(st, {{100.0, 0.0}, {0, 0}, 0.0}, p);
        d[0] = md.dpsi_s_dt.alpha;
        d[1] = md.dpsi_s_dt.beta;
        d[2] = md.dpsi_r_dt.alpha;
        d[3] = md.dpsi_r_dt.beta;
    };
    oracles::rk4(rhs, y, 0.0, 5e-4, 30000);  // 15 s
    const MachineState st{{y[0], y[1]}, {y[2], y[3]}};
    const auto c = currents_from_flux(st, p);
    CHECK(c.i_s.alpha == Catch::Approx(100.0 / 0.5).epsilon(1e-6));
    CHECK(std::abs(c.i_s.beta) < 1e-6);
    CHECK(std::abs(c.i_r.alpha) < 1e-6);
    // No rotating field interaction: torque settles to zero.
    CHECK(std::abs(electromagnetic_torque(st, p)) < 1e-6);
}

TEST_CASE("electromagnetic torque") {
    MachineParams p = test_machine();
    p.stator_inductance_h = 0.21;
    p.rotor_inductance_h = 0.21;
    p.mutual_inductance_h = 0.20;
    const double det = p.flux_determinant();

    SECTION("two-axis cross product with p = 2") {
        // Rotor flux chosen so i_s = (0, 10) with psi_s = (1, 0).
        const MachineState st{{1.0, 0.0},
                              {0.21 / 0.20, -10.0 * det / 0.20}};
        const auto c = currents_from_flux(st, p);
        REQUIRE(c.i_s.alpha == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(c.i_s.beta == Catch::Approx(10.0));
        CHECK(electromagnetic_torque(st, p) == Catch::Approx(30.0));
    }
    SECTION("parallel flux and current give zero torque") {
        p.mutual_inductance_h = 0.0;  // i_s parallel to psi_s
        const MachineState st{{0.3, 0.4}, {0.0, 0.0}};
        CHECK(electromagnetic_torque(st, p) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("sign flips with negated current") {
        const MachineState st{{1.0, 0.0}, {0.21 / 0.20, -10.0 * det / 0.20}};
        const MachineState neg{{1.0, 0.0}, {0.21 / 0.20, +10.0 * det / 0.20}};
        // Negating i_s.beta flips the torque sign (psi_s unchanged).
        CHECK(electromagnetic_torque(neg, p) ==
              Catch::Approx(-electromagnetic_torque(st, p)));
    }
}

TEST_CASE("steady state torque oracle") {
    const MachineParams p = test_machine();
    CHECK(steady_state_torque(0.0, 230.0, 50.0, p) == 0.0);
    CHECK_THROWS_AS(steady_state_torque(1.5, 230.0, 50.0, p), std::domain_error);
    CHECK_THROWS_AS(steady_state_torque(0.1, 230.0, 0.0, p), std::domain_error);

    // Near-odd symmetry of the torque-slip curve around zero slip.
    const double m_pos = steady_state_torque(0.005, 230.0, 50.0, p);
    const double m_neg = steady_state_torque(-0.005, 230.0, 50.0, p);
    CHECK(m_pos > 0.0);
    CHECK(m_neg < 0.0);
    CHECK(std::abs(m_pos + m_neg) < 0.15 * std::abs(m_pos));
}

TEST_CASE("dynamic model matches the equivalent circuit at constant slip") {
    const MachineParams p = test_machine();
    const double u_rms = 230.0;
    const double u_peak = std::sqrt(2.0) * u_rms;
    for (double slip : {0.03, -0.03}) {
        const auto run = run_constant_slip(p, slip, u_peak, 50.0, 3.0, 2e-4, 2.0);
        const double expected = steady_state_torque(slip, u_rms, 50.0, p);
        CHECK(run.mean_torque == Catch::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("super-synchronous operation produces negative torque") {
    const MachineParams p = test_machine();
    const auto run = run_constant_slip(p, -0.03, std::sqrt(2.0) * 230.0, 50.0,
                                       3.0, 2e-4, 2.0);
    CHECK(run.mean_torque < 0.0);
}

TEST_CASE("energy audit balances over the full transient") {
    const MachineParams p = test_machine();
    const auto run = run_constant_slip(p, 0.03, std::sqrt(2.0) * 230.0, 50.0,
                                       3.0, 1e-4, 2.0);
    const double residual = run.elec_in_j - run.copper_loss_j - run.mech_out_j -
                            (run.magnetic_final_j - run.magnetic_initial_j);
    const double reference = std::max(std::abs(run.elec_in_j), std::abs(run.mech_out_j));
    CHECK(std::abs(residual) <= 0.005 * reference);
}
