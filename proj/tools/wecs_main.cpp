// wecs command line: run/validate/sweep scenarios, synthesize and verify
// wind series. Exit codes: 0 ok, 2 validation error, 3 numerical abort.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <wecs/wecs.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string base_dir_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? "." : path.substr(0, slash);
}

/// Wind spec document: either a full scenario (its "wind" subtree is used)
/// or a bare wind spec object.
wecs::windfield::WindFieldSpec load_wind_spec(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw wecs::ValidationError({std::string("spec: JSON parse error: ") + e.what()});
    }
    if (doc.is_object() && doc.contains("wind")) {
        auto scenario = wecs::config::load_scenario(text, base_dir_of(path));
        if (!scenario.wind) {
            throw wecs::ValidationError({"spec: scenario has no wind section"});
        }
        return *scenario.wind;
    }
    std::vector<std::string> issues;
    auto spec = wecs::config::detail::parse_wind(doc, "wind", 0, issues);
    if (!issues.empty()) throw wecs::ValidationError(std::move(issues));
    spec.validate();
    return spec;
}

void print_statistics(const wecs::windfield::StatisticsReport& stats) {
    std::printf("welch segments: psd %zu, coherence %zu (50%% overlap, Hann)\n",
                stats.psd_segment, stats.coherence_segment);
    for (const auto& p : stats.points) {
        std::printf("point %zu: mean %.6g  std %.6g  skewness %+.4g  "
                    "excess kurtosis %+.4g\n",
                    p.point_index, p.moments.mean, p.moments.std_dev,
                    p.moments.skewness, p.moments.excess_kurtosis);
    }
    for (const auto& pr : stats.pairs) {
        double max_coh = 0.0;
        for (std::size_t k = 1; k < pr.cross.coherence.size(); ++k) {
            max_coh = std::max(max_coh, pr.cross.coherence[k]);
        }
        std::printf("pair (%zu,%zu): %zu coherence bins, peak %.4g\n", pr.index_i,
                    pr.index_j, pr.cross.frequency_hz.size(), max_coh);
    }
}

void print_verification(const wecs::windfield::VerificationReport& report) {
    for (const auto& c : report.checks) {
        std::printf("[%s] %-32s value %+.4g  bound %.4g\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.value, c.bound);
    }
    std::printf("%s\n", report.all_pass ? "all checks passed" : "CHECKS FAILED");
}

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
};

RunResult run_one(const wecs::engine::Scenario& scenario, const std::string& out_dir) {
    RunResult result;
    try {
        std::filesystem::create_directories(out_dir);
        wecs::engine::Simulator sim(scenario);
        const auto out = sim.integrate();
        wecs::csv::write_csv_file(out, out_dir + "/run.csv");
        wecs::csv::write_summary_file(out, out_dir + "/summary.txt");
        std::ostringstream msg;
        msg << out_dir << ": " << out.n_rows << " rows, energy residual "
            << wecs::csv::format_g9(out.audit.relative_residual());
        result.message = msg.str();
    } catch (const wecs::ValidationError& e) {
        result.exit_code = kExitValidation;
        result.message = e.what();
    } catch (const wecs::NumericalError& e) {
        result.exit_code = kExitNumerical;
        result.message = e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitError;
        result.message = e.what();
    }
    return result;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wind energy conversion system simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, spec_path, series_path, vary;

    auto* cmd_run = app.add_subcommand("run", "integrate a scenario and write CSV + summary");
    cmd_run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    cmd_run->add_option("--out", out_path, "output directory")->required();

    auto* cmd_validate = app.add_subcommand("validate", "check a scenario file");
    cmd_validate->add_option("--scenario", scenario_path, "scenario JSON file")->required();

    auto* cmd_sweep = app.add_subcommand("sweep", "run scenario variants in parallel");
    cmd_sweep->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    cmd_sweep->add_option("--vary", vary, "dotted.key=v1,v2,... values substituted per run")
        ->required();
    cmd_sweep->add_option("--out", out_path, "output directory")->required();

    auto* cmd_wind = app.add_subcommand("wind", "synthesize a wind series to CSV");
    cmd_wind->add_option("--spec", spec_path, "wind spec or scenario JSON file")->required();
    cmd_wind->add_option("--out", out_path, "output CSV file")->required();

    auto* cmd_wind_verify =
        app.add_subcommand("wind-verify", "estimate statistics of a series and check them");
    cmd_wind_verify->add_option("--series", series_path, "wind series CSV")->required();
    cmd_wind_verify->add_option("--spec", spec_path, "wind spec or scenario JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_run) {
            auto scenario = wecs::config::load_scenario_file(scenario_path);
            for (const auto& w : scenario.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            const auto result = run_one(scenario, out_path);
            std::cout << result.message << '\n';
            return result.exit_code;
        }

        if (*cmd_validate) {
            auto scenario = wecs::config::load_scenario_file(scenario_path);
            for (const auto& w : scenario.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            std::cout << "OK\n";
            return kExitOk;
        }

        if (*cmd_sweep) {
            const auto eq = vary.find('=');
            if (eq == std::string::npos) {
                std::cerr << "--vary expects dotted.key=v1,v2,...\n";
                return kExitValidation;
            }
            const std::string key = vary.substr(0, eq);
            std::vector<std::string> values;
            std::stringstream vs(vary.substr(eq + 1));
            std::string v;
            while (std::getline(vs, v, ',')) values.push_back(v);
            if (values.empty()) {
                std::cerr << "--vary: no values given\n";
                return kExitValidation;
            }

            const std::string text = read_file(scenario_path);
            const std::string base_dir = base_dir_of(scenario_path);
            nlohmann::json doc = nlohmann::json::parse(text);

            // Independent scenario per value; runs execute in parallel and
            // write into directories keyed by the varied value.
            std::vector<std::future<RunResult>> futures;
            std::vector<std::string> labels;
            for (const auto& value : values) {
                nlohmann::json variant = doc;
                nlohmann::json* node = &variant;
                std::stringstream ks(key);
                std::string part;
                std::vector<std::string> parts;
                while (std::getline(ks, part, '.')) parts.push_back(part);
                for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
                    node = &(*node)[parts[i]];
                }
                nlohmann::json parsed_value;
                try {
                    parsed_value = nlohmann::json::parse(value);
                } catch (const nlohmann::json::parse_error&) {
                    parsed_value = value;  // plain string
                }
                (*node)[parts.back()] = parsed_value;

                std::string label = key + "=" + value;
                for (auto& ch : label) {
                    if (ch == '/' || ch == ' ') ch = '_';
                }
                labels.push_back(label);
                const std::string dir = out_path + "/" + label;
                const std::string variant_text = variant.dump();
                futures.push_back(std::async(std::launch::async, [variant_text, base_dir,
                                                                  dir]() -> RunResult {
                    try {
                        auto scenario = wecs::config::load_scenario(variant_text, base_dir);
                        return run_one(scenario, dir);
                    } catch (const wecs::ValidationError& e) {
                        return {kExitValidation, e.what()};
                    } catch (const std::exception& e) {
                        return {kExitError, e.what()};
                    }
                }));
            }
            int exit_code = kExitOk;
            for (std::size_t i = 0; i < futures.size(); ++i) {
                const auto result = futures[i].get();
                std::cout << labels[i] << ": "
                          << (result.exit_code == kExitOk ? result.message : result.message)
                          << '\n';
                exit_code = std::max(exit_code, result.exit_code);
            }
            return exit_code;
        }

        if (*cmd_wind) {
            const auto spec = load_wind_spec(spec_path);
            const auto series = wecs::windfield::generate(spec);
            wecs::csv::write_wind_csv_file(series, out_path);
            std::cout << out_path << ": " << series.n_points << " points x "
                      << series.n_steps << " steps\n";
            return kExitOk;
        }

        if (*cmd_wind_verify) {
            const auto spec = load_wind_spec(spec_path);
            std::ifstream f(series_path);
            if (!f) throw std::runtime_error("cannot open: " + series_path);
            const auto parsed = wecs::csv::parse_csv(f);
            const auto series = wecs::csv::wind_series_from_csv(parsed);
            const auto stats = wecs::windfield::estimate_statistics(series);
            print_statistics(stats);
            const auto report = wecs::windfield::verify_series(spec, series, stats);
            print_verification(report);
            return report.all_pass ? kExitOk : kExitValidation;
        }
    } catch (const wecs::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    } catch (const wecs::NumericalError& e) {
        std::cerr << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
