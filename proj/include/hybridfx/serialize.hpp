#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "error.hpp"
#include "simulator.hpp"
#include "stats.hpp"
#include "symbolic.hpp"
#include "volprocess.hpp"

namespace hybridfx {

using json = nlohmann::json;

// Covariance: {"m": int, "entries": row-major array}

inline json to_json(const CovarianceMatrix& c) {
    const auto d = c.entries().data();
    return json{{"m", c.dim()}, {"entries", std::vector<double>(d.begin(), d.end())}};
}

inline CovarianceMatrix covariance_from_json(const json& j) {
    if (!j.is_object() || !j.contains("m") || !j.contains("entries"))
        throw DataError("covariance JSON: expected {\"m\": int, \"entries\": [...]}");
    const auto m = j.at("m").get<std::size_t>();
    const auto entries = j.at("entries").get<std::vector<double>>();
    if (entries.size() != m * m)
        throw DataError("covariance JSON: entries has " + std::to_string(entries.size()) + " values, expected " +
                        std::to_string(m * m));
    Matrix c(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) c(i, k) = entries[i * m + k];
    return CovarianceMatrix(std::move(c));
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(path, 0, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw CsvError(path, 0, std::string("invalid JSON: ") + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) { csv::write_lines(path, text); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json to_json(const SignSumMeasure& s) {
    return json{{"m", s.m},
                {"support", s.support},
                {"probabilities", s.probabilities},
                {"counts", s.counts},
                {"sample_count", s.sample_count},
                {"off_lattice_count", s.off_lattice_count}};
}

inline json to_json(const QEstimate& q) {
    return json{{"q", q.q}, {"std_error", q.std_error}, {"method", std::string(to_string(q.method))}};
}

inline json to_json(const SimConfig& c) {
    json j{{"n", c.n},
           {"m", c.m},
           {"alpha", c.alpha},
           {"steps", c.steps},
           {"seed", c.seed},
           {"mode", std::string(to_string(c.mode))},
           {"record_internals", c.record_internals},
           {"lag", c.lag},
           {"vol_mode", std::string(to_string(c.vol_mode))},
           {"initial_vol", c.initial_vol},
           {"rule", {{"inner", c.rule.inner}, {"outer", c.rule.outer}}}};
    j["covariance"] = c.covariance ? to_json(*c.covariance) : json(nullptr);
    return j;
}

inline json to_json(const DecayFit& d) {
    return json{{"rate", d.rate},         {"intercept", d.intercept}, {"fit_range", {d.s_min, d.s_max}},
                {"points", d.points},     {"r_squared", d.r_squared}};
}

inline json to_json(const CcdfTable& t) {
    return json{{"s", t.s}, {"p", t.p}, {"counts", t.counts}, {"total", t.total}};
}

/// Keeps at most `max_points` evenly spaced entries, always including both
/// ends; 0 keeps everything.
inline json thinned_points(const PointList& pts, std::size_t max_points) {
    json arr = json::array();
    if (pts.empty()) return arr;
    if (max_points == 0 || pts.size() <= max_points) {
        for (const auto& [a, b] : pts) arr.push_back({a, b});
        return arr;
    }
    const std::size_t keep = std::max<std::size_t>(max_points, 2);
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t idx = i * (pts.size() - 1) / (keep - 1);
        arr.push_back({pts[idx].first, pts[idx].second});
    }
    return arr;
}

inline json to_json(const StatsBundle& b, std::size_t max_plot_points = 0) {
    json j{{"observations", b.observations},
           {"burn_in", b.burn_in},
           {"flip",
            {{"flips", b.flip.flips},
             {"mean_duration", b.flip.mean_duration},
             {"max_duration", b.flip.max_duration},
             {"n_used", b.flip.n_used}}},
           {"ccdf", to_json(b.ccdf)},
           {"kurtosis_excess", b.kurtosis_excess},
           {"phase_slope", b.phase_slope},
           {"rv_lag1_corr", b.rv_lag1_corr},
           {"rv_lag1_t", b.rv_lag1_t},
           {"npp", thinned_points(b.npp, max_plot_points)},
           {"phase", thinned_points(b.phase, max_plot_points)},
           {"rv_phase", thinned_points(b.rv_phase, max_plot_points)},
           {"plot_points_total", {{"npp", b.npp.size()}, {"phase", b.phase.size()}, {"rv_phase", b.rv_phase.size()}}}};
    j["decay"] = b.decay ? to_json(*b.decay) : json(nullptr);
    j["q_from_decay"] = b.q_from_decay ? json(*b.q_from_decay) : json(nullptr);
    if (!b.decay_note.empty()) j["decay_note"] = b.decay_note;
    return j;
}

inline std::string points_csv(const PointList& pts, const std::string& header) {
    std::string out = header + "\n";
    for (const auto& [a, b] : pts) out += csv::format_double(a) + "," + csv::format_double(b) + "\n";
    return out;
}

inline std::string ccdf_csv(const CcdfTable& t) {
    std::string out = "s,p,count\n";
    for (std::size_t i = 0; i < t.s.size(); ++i)
        out += std::to_string(t.s[i]) + "," + csv::format_double(t.p[i]) + "," + std::to_string(t.counts[i]) + "\n";
    return out;
}

/// Simulation output as CSV: k, X_k, then g_k when signals exist (blank for
/// warm-up rows), then Y_1..Y_m when levels were recorded.
inline std::string simulation_csv(const SimOutput& sim, std::size_t drop_front = 0) {
    const auto x = sim.returns.values();
    const std::size_t n = sim.config.n;
    const bool with_g = !sim.signals.empty();
    const bool with_y = sim.vol_levels.has_value();
    std::string out = "k,X_k";
    if (with_g) out += ",g_k";
    if (with_y)
        for (std::size_t j = 0; j < sim.vol_levels->cols(); ++j) out += ",Y_" + std::to_string(j + 1);
    out += '\n';
    out.reserve(out.size() + x.size() * (with_y ? 120 : 32));
    for (std::size_t k = drop_front; k < x.size(); ++k) {
        out += std::to_string(k + 1);
        out += ',';
        out += csv::format_double(x[k]);
        if (with_g) {
            out += ',';
            if (k >= n) out += std::to_string(to_int(sim.signals[k - n]));
        }
        if (with_y)
            for (double y : sim.vol_levels->row(k)) {
                out += ',';
                out += csv::format_double(y);
            }
        out += '\n';
    }
    return out;
}

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(path, 0, "cannot open file");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    return out;
}

}  // namespace hybridfx
