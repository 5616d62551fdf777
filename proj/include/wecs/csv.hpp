// CSV and summary writers: 9 significant digits, LF line endings, plus a
// small reader for verification tools and round-trip tests.
#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <wecs/engine.hpp>
#include <wecs/windfield.hpp>

namespace wecs::csv {

/// Fixed output format of every numeric cell: 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void write_csv(const engine::TimeSeriesOutput& out, std::ostream& os) {
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
        if (c) os << ',';
        os << out.columns[c];
    }
    os << '\n';
    for (std::size_t r = 0; r < out.n_rows; ++r) {
        for (std::size_t c = 0; c < out.columns.size(); ++c) {
            if (c) os << ',';
            os << format_g9(out.value(r, c));
        }
        os << '\n';
    }
}

inline void write_csv_file(const engine::TimeSeriesOutput& out, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(out, f);
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

/// Wind series as columns t, v_p0, v_p1, ...
inline void write_wind_csv(const windfield::WindSeries& series, std::ostream& os) {
    os << 't';
    for (std::size_t p = 0; p < series.n_points; ++p) os << ",v_p" << p;
    os << '\n';
    for (std::size_t k = 0; k < series.n_steps; ++k) {
        os << format_g9(static_cast<double>(k) * series.dt_s);
        for (std::size_t p = 0; p < series.n_points; ++p) {
            os << ',' << format_g9(series.at(p, k));
        }
        os << '\n';
    }
}

inline void write_wind_csv_file(const windfield::WindSeries& series,
                                const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_wind_csv(series, f);
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    std::size_t n_rows = 0;
};

inline ParsedCsv parse_csv(std::istream& is) {
    ParsedCsv parsed;
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("parse_csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) parsed.header.push_back(cell);
    parsed.columns.resize(parsed.header.size());

    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c >= parsed.header.size()) {
                throw std::runtime_error("parse_csv: row wider than header");
            }
            parsed.columns[c].push_back(std::stod(cell));
            ++c;
        }
        if (c != parsed.header.size()) {
            throw std::runtime_error("parse_csv: row narrower than header");
        }
        ++parsed.n_rows;
    }
    return parsed;
}

/// Reassemble a parsed wind CSV (t, v_p0, ...) into a WindSeries.
inline windfield::WindSeries wind_series_from_csv(const ParsedCsv& parsed) {
    if (parsed.header.size() < 2 || parsed.header[0] != "t") {
        throw std::runtime_error("wind csv: expected columns t, v_p0, ...");
    }
    if (parsed.n_rows < 2) {
        throw std::runtime_error("wind csv: need at least 2 rows");
    }
    windfield::WindSeries s;
    s.n_points = parsed.header.size() - 1;
    s.n_steps = parsed.n_rows;
    s.dt_s = parsed.columns[0][1] - parsed.columns[0][0];
    s.samples.resize(s.n_points * s.n_steps);
    for (std::size_t p = 0; p < s.n_points; ++p) {
        for (std::size_t k = 0; k < s.n_steps; ++k) {
            s.samples[p * s.n_steps + k] = parsed.columns[p + 1][k];
        }
    }
    return s;
}

struct ColumnSummary {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;
};

inline std::vector<ColumnSummary> summarize(const engine::TimeSeriesOutput& out) {
    std::vector<ColumnSummary> result;
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
        ColumnSummary s;
        s.name = out.columns[c];
        double sum = 0.0, sum_sq = 0.0;
        s.min = s.max = out.value(0, c);
        for (std::size_t r = 0; r < out.n_rows; ++r) {
            const double v = out.value(r, c);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / static_cast<double>(out.n_rows);
        for (std::size_t r = 0; r < out.n_rows; ++r) {
            const double d = out.value(r, c) - s.mean;
            sum_sq += d * d;
        }
        s.std_dev = out.n_rows > 1
                        ? std::sqrt(sum_sq / static_cast<double>(out.n_rows - 1))
                        : 0.0;
        result.push_back(std::move(s));
    }
    return result;
}

inline void write_summary(const engine::TimeSeriesOutput& out, std::ostream& os) {
    os << "column,min,max,mean,std\n";
    for (const auto& s : summarize(out)) {
        os << s.name << ',' << format_g9(s.min) << ',' << format_g9(s.max) << ','
           << format_g9(s.mean) << ',' << format_g9(s.std_dev) << '\n';
    }
    const auto& a = out.audit;
    os << "\nenergy audit [J]\n";
    os << "aero_work," << format_g9(a.aero_work_j) << '\n';
    os << "drive_work," << format_g9(a.drive_work_j) << '\n';
    os << "friction_loss," << format_g9(a.friction_loss_j) << '\n';
    os << "gear_damping_loss," << format_g9(a.gear_damping_loss_j) << '\n';
    os << "machine_copper_loss," << format_g9(a.machine_copper_loss_j) << '\n';
    os << "line_loss," << format_g9(a.line_loss_j) << '\n';
    os << "load_loss," << format_g9(a.load_loss_j) << '\n';
    os << "source_absorbed," << format_g9(a.source_absorbed_j) << '\n';
    os << "stored_delta," << format_g9(a.stored_final_j - a.stored_initial_j) << '\n';
    os << "residual," << format_g9(a.residual_j()) << '\n';
    os << "relative_residual," << format_g9(a.relative_residual()) << '\n';
}

inline void write_summary_file(const engine::TimeSeriesOutput& out,
                               const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_summary(out, f);
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

}  // namespace wecs::csv
