// Scenario configuration: a strict JSON reader (unknown keys rejected, units
// encoded in key names, issues aggregated across the whole document) that
// produces a validated engine::Scenario.
#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <wecs/common.hpp>
#include <wecs/engine.hpp>

namespace wecs::config {

using nlohmann::json;

namespace detail {

/// Strict object reader: every key the parser knows is marked, finish()
/// reports the rest as unknown together with the expected key set.
class Reader {
public:
    Reader(const json* j, std::string path, std::vector<std::string>& issues)
        : j_(j), path_(std::move(path)), issues_(&issues) {
        if (j_ && !j_->is_object()) {
            issues_->push_back(path_ + ": expected an object");
            j_ = nullptr;
        }
    }

    bool valid() const { return j_ != nullptr; }
    const std::string& path() const { return path_; }

    bool has(const std::string& key) {
        known_.insert(key);
        return j_ && j_->contains(key);
    }

    const json* take(const std::string& key) {
        known_.insert(key);
        if (!j_ || !j_->contains(key)) return nullptr;
        return &j_->at(key);
    }

    double number(const std::string& key, bool required, double def = 0.0) {
        const json* v = take(key);
        if (!v) {
            if (required) issues_->push_back(path_ + "." + key + ": required");
            return def;
        }
        if (!v->is_number()) {
            issues_->push_back(path_ + "." + key + ": expected a number");
            return def;
        }
        return v->get<double>();
    }

    std::optional<double> opt_number(const std::string& key) {
        const json* v = take(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            issues_->push_back(path_ + "." + key + ": expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    long long integer(const std::string& key, bool required, long long def = 0) {
        const json* v = take(key);
        if (!v) {
            if (required) issues_->push_back(path_ + "." + key + ": required");
            return def;
        }
        if (!v->is_number_integer()) {
            issues_->push_back(path_ + "." + key + ": expected an integer");
            return def;
        }
        return v->get<long long>();
    }

    std::string text(const std::string& key, bool required, std::string def = {}) {
        const json* v = take(key);
        if (!v) {
            if (required) issues_->push_back(path_ + "." + key + ": required");
            return def;
        }
        if (!v->is_string()) {
            issues_->push_back(path_ + "." + key + ": expected a string");
            return def;
        }
        return v->get<std::string>();
    }

    /// Angle given as either <base>_rad or <base>_deg (exactly one).
    double angle(const std::string& base, double def = 0.0) {
        const json* rad = take(base + "_rad");
        const json* deg = take(base + "_deg");
        if (rad && deg) {
            issues_->push_back(path_ + ": give exactly one of " + base + "_rad / " +
                               base + "_deg");
            return def;
        }
        const json* v = rad ? rad : deg;
        if (!v) return def;
        if (!v->is_number()) {
            issues_->push_back(path_ + "." + base + ": expected a number");
            return def;
        }
        return rad ? v->get<double>() : v->get<double>() * PI / 180.0;
    }

    void finish() {
        if (!j_) return;
        for (const auto& item : j_->items()) {
            if (!known_.count(item.key())) {
                std::string msg = path_ + ": unknown key '" + item.key() +
                                  "' (expected one of:";
                for (const auto& k : known_) msg += " " + k;
                msg += ")";
                issues_->push_back(std::move(msg));
            }
        }
    }

private:
    const json* j_;
    std::string path_;
    std::vector<std::string>* issues_;
    std::set<std::string> known_;
};

inline PiecewiseLinear parse_table(const json& j, const std::string& path,
                                   std::vector<std::string>& issues) {
    std::vector<double> xs, ys;
    if (!j.is_array()) {
        issues.push_back(path + ": expected an array of [x, y] pairs");
        return {};
    }
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
            !row[1].is_number()) {
            issues.push_back(path + ": each entry must be a [x, y] number pair");
            return {};
        }
        xs.push_back(row[0].get<double>());
        ys.push_back(row[1].get<double>());
    }
    try {
        return PiecewiseLinear(std::move(xs), std::move(ys));
    } catch (const std::exception& e) {
        issues.push_back(path + ": " + e.what());
        return {};
    }
}

inline PiecewiseLinear load_table_csv(const std::string& file_path,
                                      const std::string& json_path,
                                      std::vector<std::string>& issues) {
    std::ifstream f(file_path);
    if (!f) {
        issues.push_back(json_path + ": cannot open '" + file_path + "'");
        return {};
    }
    std::vector<double> xs, ys;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) {
            issues.push_back(json_path + ": malformed row '" + line + "'");
            return {};
        }
        try {
            xs.push_back(std::stod(a));
            ys.push_back(std::stod(b));
        } catch (const std::exception&) {
            if (first) {
                first = false;
                continue;  // header row
            }
            issues.push_back(json_path + ": non-numeric row '" + line + "'");
            return {};
        }
        first = false;
    }
    try {
        return PiecewiseLinear(std::move(xs), std::move(ys));
    } catch (const std::exception& e) {
        issues.push_back(json_path + ": " + e.what());
        return {};
    }
}

inline windfield::WindFieldSpec parse_wind(const json& j, const std::string& path,
                                           std::uint64_t default_seed,
                                           std::vector<std::string>& issues) {
    windfield::WindFieldSpec spec;
    Reader r(&j, path, issues);
    if (!r.valid()) return spec;

    if (const json* pts = r.take("points")) {
        if (!pts->is_array()) {
            issues.push_back(path + ".points: expected an array");
        } else {
            for (std::size_t i = 0; i < pts->size(); ++i) {
                Reader pr(&(*pts)[i], path + ".points[" + std::to_string(i) + "]",
                          issues);
                windfield::GridPoint gp;
                gp.id = static_cast<int>(pr.integer("id", false,
                                                    static_cast<long long>(i)));
                gp.position = {pr.number("x_m", true), pr.number("y_m", true),
                               pr.number("z_m", true)};
                pr.finish();
                spec.points.push_back(gp);
            }
        }
    } else {
        issues.push_back(path + ".points: required");
    }

    spec.nacelle_height_m = r.number("nacelle_height_m", true);
    spec.nacelle_wind_mps = r.number("nacelle_wind_mps", true);
    spec.shear_exponent = r.number("shear_exponent", false, 0.0);
    spec.sample_rate_hz = r.number("sample_rate_hz", true);
    spec.duration_s = r.number("duration_s", true);
    if (const json* s = r.take("seed")) {
        if (s->is_number_unsigned() || s->is_number_integer()) {
            spec.seed = s->get<std::uint64_t>();
        } else {
            issues.push_back(path + ".seed: expected an integer");
        }
    } else {
        spec.seed = default_seed;
    }

    if (const json* turb = r.take("turbulence")) {
        Reader tr(turb, path + ".turbulence", issues);
        const bool direct = tr.has("direct");
        const bool pan = tr.has("panowsky");
        if (direct == pan) {
            issues.push_back(path + ".turbulence: exactly one turbulence model "
                             "('direct' or 'panowsky') required");
        } else if (direct) {
            Reader dr(tr.take("direct"), path + ".turbulence.direct", issues);
            spec.turbulence = windfield::DirectTurbulence{dr.number("intensity", true)};
            dr.finish();
        } else {
            Reader pr(tr.take("panowsky"), path + ".turbulence.panowsky", issues);
            spec.turbulence =
                windfield::PanowskyTurbulence{pr.number("roughness_length_m", true)};
            pr.finish();
        }
        tr.finish();
    } else {
        issues.push_back(path + ".turbulence: required");
    }

    if (const json* psd = r.take("psd")) {
        Reader sr(psd, path + ".psd", issues);
        const bool kaimal = sr.has("kaimal");
        const bool tab = sr.has("tabulated");
        if (kaimal == tab) {
            issues.push_back(path + ".psd: exactly one model ('kaimal' or "
                             "'tabulated') required");
        } else if (kaimal) {
            Reader kr(sr.take("kaimal"), path + ".psd.kaimal", issues);
            spec.psd = windfield::KaimalPsd{kr.number("length_scale_m", true)};
            kr.finish();
        } else {
            Reader tr2(sr.take("tabulated"), path + ".psd.tabulated", issues);
            if (const json* t = tr2.take("table")) {
                spec.psd = windfield::TabulatedPsd{
                    parse_table(*t, path + ".psd.tabulated.table", issues)};
            } else {
                issues.push_back(path + ".psd.tabulated.table: required");
            }
            tr2.finish();
        }
        sr.finish();
    } else {
        issues.push_back(path + ".psd: required");
    }

    if (const json* coh = r.take("coherence")) {
        Reader cr(coh, path + ".coherence", issues);
        const bool dav = cr.has("davenport");
        const bool tab = cr.has("tabulated");
        if (dav == tab) {
            issues.push_back(path + ".coherence: exactly one model ('davenport' or "
                             "'tabulated') required");
        } else if (dav) {
            Reader dr(cr.take("davenport"), path + ".coherence.davenport", issues);
            spec.coherence = windfield::DavenportCoherence{dr.number("decay", true)};
            dr.finish();
        } else {
            Reader tr2(cr.take("tabulated"), path + ".coherence.tabulated", issues);
            if (const json* t = tr2.take("table")) {
                spec.coherence = windfield::TabulatedCoherence{
                    parse_table(*t, path + ".coherence.tabulated.table", issues)};
            } else {
                issues.push_back(path + ".coherence.tabulated.table: required");
            }
            tr2.finish();
        }
        cr.finish();
    } else {
        issues.push_back(path + ".coherence: required");
    }

    if (const json* ang = r.take("angle_tf")) {
        Reader ar(ang, path + ".angle_tf", issues);
        const bool zero = ar.has("zero");
        const bool tab = ar.has("tabulated");
        if (zero == tab) {
            issues.push_back(path + ".angle_tf: exactly one model ('zero' or "
                             "'tabulated') required");
        } else if (zero) {
            Reader zr(ar.take("zero"), path + ".angle_tf.zero", issues);
            spec.angle_tf = windfield::ZeroAngle{};
            zr.finish();
        } else {
            Reader tr2(ar.take("tabulated"), path + ".angle_tf.tabulated", issues);
            if (const json* t = tr2.take("table")) {
                spec.angle_tf = windfield::TabulatedAngle{
                    parse_table(*t, path + ".angle_tf.tabulated.table", issues)};
            } else {
                issues.push_back(path + ".angle_tf.tabulated.table: required");
            }
            tr2.finish();
        }
        ar.finish();
    }

    r.finish();
    return spec;
}

inline drivetrain::InertiaParams parse_inertia(const json& j, const std::string& path,
                                               std::vector<std::string>& issues) {
    Reader r(&j, path, issues);
    drivetrain::InertiaParams p;
    p.theta_kgm2 = r.number("theta_kgm2", true);
    p.friction_nm_per_radps = r.number("friction_nm_per_radps", false, 0.0);
    r.finish();
    return p;
}

}  // namespace detail

/// Parse and fully validate a scenario document. base_dir resolves relative
/// file references (cp-table CSVs).
inline engine::Scenario load_scenario(const std::string& config_text,
                                      const std::string& base_dir = ".") {
    json doc;
    try {
        doc = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("config: JSON parse error: ") + e.what()});
    }

    std::vector<std::string> issues;
    engine::Scenario sc;
    detail::Reader r(&doc, "scenario", issues);

    const std::string mode = r.text("mode", false, "transient");
    if (mode == "transient") {
        sc.mode = engine::SimulationMode::transient;
    } else if (mode == "rms") {
        sc.mode = engine::SimulationMode::rms;
    } else {
        issues.push_back("scenario.mode: must be 'transient' or 'rms'");
    }

    if (const json* s = r.take("seed")) {
        if (s->is_number_unsigned() || s->is_number_integer()) {
            sc.seed = s->get<std::uint64_t>();
        } else {
            issues.push_back("scenario.seed: expected an integer");
        }
    }

    if (const json* integ = r.take("integrator")) {
        detail::Reader ir(integ, "scenario.integrator", issues);
        sc.integrator.method = ir.text("method", false, "rk4");
        sc.integrator.dt_s = ir.number("dt_s", true);
        sc.integrator.duration_s = ir.number("duration_s", true);
        sc.integrator.output_every_s = ir.number("output_every_s", false, 0.0);
        ir.finish();
    } else {
        issues.push_back("scenario.integrator: required");
    }

    if (const json* wind = r.take("wind")) {
        sc.wind = detail::parse_wind(*wind, "scenario.wind", sc.seed, issues);
    }

    if (const json* turb = r.take("turbine")) {
        detail::Reader tr(turb, "scenario.turbine", issues);
        engine::TurbineConfig tc;
        tc.position_x_m = tr.number("position_x_m", false, 0.0);
        tc.position_y_m = tr.number("position_y_m", false, 0.0);
        tc.nacelle_height_m = tr.number("nacelle_height_m", true);
        tc.cone_angle_rad = tr.angle("cone_angle", 0.0);
        if (const json* rotor = tr.take("rotor")) {
            const std::size_t issues_before = issues.size();
            detail::Reader rr(rotor, "scenario.turbine.rotor", issues);
            const double radius = rr.number("radius_m", true);
            const double rho = rr.number("air_density_kgpm3", false, 1.225);
            PiecewiseLinear table;
            const bool inline_table = rr.has("cp_table");
            const bool csv_table = rr.has("cp_table_csv");
            if (inline_table == csv_table) {
                issues.push_back(
                    "scenario.turbine.rotor: give exactly one of cp_table / cp_table_csv");
            } else if (inline_table) {
                table = detail::parse_table(*rr.take("cp_table"),
                                            "scenario.turbine.rotor.cp_table", issues);
            } else {
                const std::string rel = rr.text("cp_table_csv", true);
                table = detail::load_table_csv(base_dir + "/" + rel,
                                               "scenario.turbine.rotor.cp_table_csv",
                                               issues);
            }
            rr.finish();
            if (issues.size() == issues_before) {
                try {
                    tc.rotor = aero::RotorParams(radius, rho, std::move(table));
                } catch (const std::exception& e) {
                    issues.push_back(std::string("scenario.turbine.rotor: ") + e.what());
                }
            }
        } else {
            issues.push_back("scenario.turbine.rotor: required");
        }
        tr.finish();
        sc.turbine = std::move(tc);
    }

    if (const json* drive = r.take("drive")) {
        detail::Reader dr(drive, "scenario.drive", issues);
        sc.constant_torque_nm = dr.number("constant_torque_nm", true);
        dr.finish();
    }

    if (const json* dt = r.take("drivetrain")) {
        detail::Reader dr(dt, "scenario.drivetrain", issues);
        if (const json* ri = dr.take("rotor_inertia")) {
            sc.rotor_inertia =
                detail::parse_inertia(*ri, "scenario.drivetrain.rotor_inertia", issues);
        } else {
            issues.push_back("scenario.drivetrain.rotor_inertia: required");
        }
        if (const json* gi = dr.take("generator_inertia")) {
            sc.generator_inertia = detail::parse_inertia(
                *gi, "scenario.drivetrain.generator_inertia", issues);
        }
        if (const json* gb = dr.take("gearbox")) {
            detail::Reader gr(gb, "scenario.drivetrain.gearbox", issues);
            drivetrain::GearboxParams gp;
            gp.stiffness_nm_per_rad = gr.number("stiffness_nm_per_rad", true);
            gp.damping_nm_per_radps = gr.number("damping_nm_per_radps", false, 0.0);
            gp.ratio = gr.number("ratio", true, 1.0);
            gr.finish();
            sc.gearbox = gp;
        }
        dr.finish();
    } else {
        issues.push_back("scenario.drivetrain: required");
    }

    if (const json* mach = r.take("machine")) {
        detail::Reader mr(mach, "scenario.machine", issues);
        machine::MachineParams mp;
        mp.stator_resistance_ohm = mr.number("stator_resistance_ohm", true);
        mp.rotor_resistance_ohm = mr.number("rotor_resistance_ohm", true);
        mp.stator_inductance_h = mr.number("stator_inductance_h", true);
        mp.rotor_inductance_h = mr.number("rotor_inductance_h", true);
        mp.mutual_inductance_h = mr.number("mutual_inductance_h", true);
        mp.pole_pairs = static_cast<int>(mr.integer("pole_pairs", true, 1));
        mr.finish();
        sc.machine_params = mp;
    }

    if (const json* grid = r.take("grid")) {
        detail::Reader gr(grid, "scenario.grid", issues);
        engine::GridConfig gc;
        gc.frequency_hz = gr.number("frequency_hz", true);
        if (const json* src = gr.take("source")) {
            detail::Reader sr(src, "scenario.grid.source", issues);
            gc.source.voltage_rms_v = sr.number("voltage_rms_v", true);
            gc.source.phase_rad = sr.angle("phase", 0.0);
            sr.finish();
        } else {
            issues.push_back("scenario.grid.source: required");
        }
        if (const json* line = gr.take("line")) {
            detail::Reader lr(line, "scenario.grid.line", issues);
            auto& lp = gc.line;
            lp.r0_ohm_per_m = lr.number("r0_ohm_per_m", true);
            lp.r1_ohm_per_m = lr.number("r1_ohm_per_m", true);
            lp.l0_h_per_m = lr.number("l0_h_per_m", true);
            lp.l1_h_per_m = lr.number("l1_h_per_m", true);
            lp.c_e_f_per_m = lr.number("c_e_f_per_m", false, 0.0);
            lp.c_l_f_per_m = lr.number("c_l_f_per_m", false, 0.0);
            lp.g_e_s_per_m = lr.number("g_e_s_per_m", false, 0.0);
            lp.g_l_s_per_m = lr.number("g_l_s_per_m", false, 0.0);
            lp.length_m = lr.number("length_m", true);
            lr.finish();
        } else {
            issues.push_back("scenario.grid.line: required");
        }
        gc.load_resistance_ohm = gr.opt_number("load_resistance_ohm");
        gr.finish();
        sc.grid_config = std::move(gc);
    }

    if (const json* init = r.take("initial")) {
        detail::Reader ir(init, "scenario.initial", issues);
        sc.initial.rotor_delta_rad = ir.number("rotor_delta_rad", false, 0.0);
        sc.initial.rotor_omega_radps = ir.number("rotor_omega_radps", false, 0.0);
        sc.initial.generator_delta_rad = ir.number("generator_delta_rad", false, 0.0);
        sc.initial.generator_omega_radps = ir.number("generator_omega_radps", false, 0.0);
        ir.finish();
    }

    if (const json* outputs = r.take("outputs")) {
        detail::Reader outr(outputs, "scenario.outputs", issues);
        if (const json* cols = outr.take("columns")) {
            if (!cols->is_array()) {
                issues.push_back("scenario.outputs.columns: expected an array of names");
            } else {
                for (const auto& c : *cols) {
                    if (!c.is_string()) {
                        issues.push_back(
                            "scenario.outputs.columns: entries must be strings");
                    } else {
                        sc.output_columns.push_back(c.get<std::string>());
                    }
                }
            }
        }
        outr.finish();
    }

    r.finish();
    if (!issues.empty()) throw ValidationError(std::move(issues));

    sc.validate();
    return sc;
}

inline engine::Scenario load_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string base_dir = ".";
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) base_dir = path.substr(0, slash);
    return load_scenario(ss.str(), base_dir);
}

}  // namespace wecs::config
