#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "simulator.hpp"
#include "stats.hpp"
#include "symbolic.hpp"
#include "timeseries.hpp"
#include "version.hpp"
#include "volprocess.hpp"

/// Command-line front end: simulate, analyze, compare, calibrate-cov, qprob.
///
/// Exit codes: 0 success, 1 runtime or data error, 2 usage error. Every run
/// writes a manifest (command line, seed, PRNG, config, input digests,
/// version, wall-clock time); re-running the recorded command reproduces the
/// data outputs byte for byte.
namespace hybridfx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag combination detected after parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string version_text() {
    return "hybridfx " + std::string(kVersion) + "\nprng: " + rng_identifier() + "\n";
}

/// Worker cap from HYBRIDFX_THREADS, else all logical cores.
inline std::size_t thread_budget() {
    if (const char* env = std::getenv("HYBRIDFX_THREADS"); env && *env) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw UsageError("HYBRIDFX_THREADS must be a positive integer");
    }
    return default_thread_count();
}

/// --cov accepts "equicorrelated:rho,sigma" or a path to covariance JSON.
inline CovarianceMatrix parse_cov_spec(const std::string& spec, std::size_t m) {
    constexpr std::string_view prefix = "equicorrelated:";
    if (spec.starts_with(prefix)) {
        const auto body = spec.substr(prefix.size());
        const auto comma = body.find(',');
        if (comma == std::string::npos) throw UsageError("--cov equicorrelated:<rho>,<sigma> expected, got '" + spec + "'");
        const auto rho = csv::parse_double(body.substr(0, comma));
        const auto sigma = csv::parse_double(body.substr(comma + 1));
        if (!rho || !sigma) throw UsageError("--cov: cannot parse rho/sigma in '" + spec + "'");
        return equicorrelated(m, *rho, *sigma);
    }
    auto c = covariance_from_json(read_json_file(spec));
    if (c.dim() != m)
        throw DataError(spec + ": covariance is " + std::to_string(c.dim()) + "-dimensional but --m is " +
                        std::to_string(m));
    return c;
}

struct Manifest {
    std::vector<std::string> args;
    std::optional<std::uint64_t> seed;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    json to_json() const {
        std::string joined;
        for (const auto& a : args) {
            if (!joined.empty()) joined += ' ';
            joined += a;
        }
        json ins = json::array(), outs = json::array();
        for (const auto& p : inputs) ins.push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
        for (const auto& p : outputs) outs.push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return json{{"command_line", joined},
                    {"argv", args},
                    {"seed", seed ? json(*seed) : json(nullptr)},
                    {"rng", {{"algorithm", std::string(kRngAlgorithm)}, {"version", std::string(kRngVersion)}}},
                    {"config", config},
                    {"inputs", ins},
                    {"outputs", outs},
                    {"artifact_version", std::string(kVersion)},
                    {"wall_clock_seconds", secs}};
    }

    /// To `path` when given, else one compact line on `err`.
    void emit(const std::optional<std::string>& path, std::ostream& err) const {
        if (path) write_text_file(*path, dump(to_json()));
        else err << "manifest: " << to_json().dump() << "\n";
    }
};

inline std::optional<std::string> manifest_path(const std::string& explicit_path, const std::optional<std::string>& data_out) {
    if (!explicit_path.empty()) return explicit_path;
    if (data_out) return *data_out + ".manifest.json";
    return std::nullopt;
}

inline std::string replica_path(const std::string& out, std::size_t r) {
    const std::filesystem::path p(out);
    auto name = p.stem().string() + "_r" + std::to_string(r) + p.extension().string();
    return (p.parent_path() / name).string();
}

struct Options {
    // simulate
    SimConfig sim;
    std::string mode = "hybrid";
    std::string vol_mode = "level";
    std::string cov;
    std::string out;
    std::size_t sim_drop = 0;
    std::size_t replicas = 1;
    // analyze / compare
    std::string input, input_b, column;
    std::size_t n = 2;
    std::size_t window = kBiweeklyWindow;
    std::optional<std::size_t> burn_in;
    std::uint64_t min_count = kDefaultMinCount;
    std::string out_bundle, out_plots;
    std::size_t max_plot_points = 10000;
    bool prices = false;
    // calibrate-cov
    double vol_scale = 1.0;
    double ridge = 0.0;
    bool log_levels = false;
    // qprob
    std::size_t m = 4;
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 0;
    double outer = 1.0;
    // all
    std::string manifest;
};

inline ReturnSeries load_series(const Options& o, const std::string& path) {
    if (!o.prices) return load_returns_csv(path, o.column.empty() ? std::nullopt : std::optional(o.column));
    const auto levels = load_returns_csv(path, o.column.empty() ? std::nullopt : std::optional(o.column));
    return prices_to_returns(levels.values(), levels.label());
}

inline AnalyzeOptions analyze_options(const Options& o) {
    AnalyzeOptions a;
    a.n = o.n;
    a.window = o.window;
    a.burn_in = o.burn_in;
    a.min_count = o.min_count;
    return a;
}

inline json analyze_config_echo(const Options& o) {
    return json{{"n", o.n},
                {"window", o.window},
                {"burn_in", o.burn_in ? json(*o.burn_in) : json(nullptr)},
                {"min_count", o.min_count},
                {"prices", o.prices},
                {"column", o.column}};
}

inline int cmd_simulate(Options& o, Manifest& man, std::ostream& out, std::ostream& err) {
    SimConfig cfg = o.sim;
    cfg.mode = o.mode == "pure-trend" ? SimMode::PureTrend : SimMode::Hybrid;
    cfg.vol_mode = o.vol_mode == "log" ? VolMode::Log : VolMode::Level;
    if (cfg.mode == SimMode::Hybrid) {
        if (o.cov.empty()) throw UsageError("--cov is required in hybrid mode");
        cfg.covariance = parse_cov_spec(o.cov, cfg.m);
        if (!o.cov.starts_with("equicorrelated:")) man.inputs.push_back(o.cov);
    }
    man.seed = cfg.seed;
    man.config = to_json(cfg);
    man.config["replicas"] = o.replicas;
    man.config["drop_rows"] = o.sim_drop;

    const auto runs = o.replicas == 1 ? std::vector<SimOutput>{simulate(cfg)}
                                      : simulate_batch(cfg, o.replicas, thread_budget());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto path = o.replicas == 1 ? o.out : replica_path(o.out, r);
        if (o.sim_drop >= runs[r].returns.size()) throw DataError("--burn-in drops every row");
        write_text_file(path, simulation_csv(runs[r], o.sim_drop));
        man.outputs.push_back(path);
        out << path << ": " << runs[r].returns.size() - o.sim_drop << " rows\n";
    }
    man.emit(manifest_path(o.manifest, o.out), err);
    return kExitOk;
}

inline int cmd_analyze(Options& o, Manifest& man, std::ostream& out, std::ostream& err) {
    man.inputs.push_back(o.input);
    man.config = analyze_config_echo(o);
    const auto series = load_series(o, o.input);
    const auto bundle = analyze(series, analyze_options(o));
    const auto text = dump(to_json(bundle, o.max_plot_points));
    if (o.out_bundle.empty()) {
        out << text;
    } else {
        write_text_file(o.out_bundle, text);
        man.outputs.push_back(o.out_bundle);
    }
    if (!o.out_plots.empty()) {
        std::filesystem::create_directories(o.out_plots);
        const std::filesystem::path dir(o.out_plots);
        const std::vector<std::pair<std::string, std::string>> files{
            {"ccdf.csv", ccdf_csv(bundle.ccdf)},
            {"npp.csv", points_csv(bundle.npp, "theoretical,sample")},
            {"phase.csv", points_csv(bundle.phase, "x_prev,x")},
            {"rv_phase.csv", points_csv(bundle.rv_phase, "rv_prev,rv")}};
        for (const auto& [name, body] : files) {
            const auto path = (dir / name).string();
            write_text_file(path, body);
            man.outputs.push_back(path);
        }
    }
    man.emit(manifest_path(o.manifest, o.out_bundle.empty() ? std::nullopt : std::optional(o.out_bundle)), err);
    return kExitOk;
}

inline json compare_column(const StatsBundle& b, const std::string& path) {
    return json{{"input", path},
                {"observations", b.observations},
                {"flips", b.flip.flips},
                {"decay_rate", b.decay ? json(b.decay->rate) : json(nullptr)},
                {"q_from_decay", b.q_from_decay ? json(*b.q_from_decay) : json(nullptr)},
                {"kurtosis_excess", b.kurtosis_excess},
                {"rv_lag1_corr", b.rv_lag1_corr},
                {"phase_slope", b.phase_slope}};
}

inline int cmd_compare(Options& o, Manifest& man, std::ostream& out, std::ostream& err) {
    man.inputs = {o.input, o.input_b};
    man.config = analyze_config_echo(o);
    const auto opts = analyze_options(o);
    const auto a = analyze(load_series(o, o.input), opts);
    const auto b = analyze(load_series(o, o.input_b), opts);
    json j{{"a", compare_column(a, o.input)}, {"b", compare_column(b, o.input_b)}, {"n", o.n}, {"window", o.window}};
    // "steeper" means a more negative exponential decay of the inter-flip CCDF.
    j["a_decay_steeper"] = (a.decay && b.decay) ? json(a.decay->rate < b.decay->rate) : json(nullptr);
    const auto text = dump(j);
    std::optional<std::string> data_out;
    if (o.out.empty()) out << text;
    else {
        write_text_file(o.out, text);
        man.outputs.push_back(o.out);
        data_out = o.out;
    }
    man.emit(manifest_path(o.manifest, data_out), err);
    return kExitOk;
}

inline int cmd_calibrate_cov(Options& o, Manifest& man, std::ostream& out, std::ostream& err) {
    man.inputs.push_back(o.input);
    man.config = json{{"vol_scale", o.vol_scale}, {"ridge", o.ridge}, {"log_levels", o.log_levels}};
    const auto path = load_vols_csv(o.input, o.vol_scale);
    auto incs = increments(path);
    if (o.log_levels) {
        const Matrix& y = path.values();
        Matrix d(y.rows() - 1, y.cols());
        for (std::size_t k = 0; k + 1 < y.rows(); ++k)
            for (std::size_t j = 0; j < y.cols(); ++j) d(k, j) = std::log(y(k + 1, j)) - std::log(y(k, j));
        incs = IncrementSeries(std::move(d));
    }
    if (incs.steps() < incs.terms() + 1)
        throw DataError(o.input + ": need at least m + 1 = " + std::to_string(incs.terms() + 1) + " increment rows");
    const CovarianceMatrix c =
        o.ridge > 0.0 ? regularize(sample_covariance(incs), o.ridge) : estimate_covariance(incs);
    auto j = to_json(c);
    const auto text = dump(j);
    std::optional<std::string> data_out;
    if (o.out.empty()) out << text;
    else {
        write_text_file(o.out, text);
        man.outputs.push_back(o.out);
        data_out = o.out;
        out << o.out << ": " << c.dim() << "x" << c.dim() << " covariance from " << incs.steps() << " increments\n";
    }
    man.emit(manifest_path(o.manifest, data_out), err);
    return kExitOk;
}

inline int cmd_qprob(Options& o, Manifest& man, std::ostream& out, std::ostream& err) {
    const auto c = parse_cov_spec(o.cov, o.m);
    if (!o.cov.starts_with("equicorrelated:")) man.inputs.push_back(o.cov);
    man.seed = o.seed;
    man.config = json{{"m", o.m}, {"samples", o.samples}, {"outer", o.outer}, {"covariance", to_json(c)}};
    RngState rng(o.seed);
    ThresholdRule rule;
    rule.outer = o.outer;
    const auto measure = sign_sum_distribution(c, o.samples, rng, rule);
    const auto q = q_from_measure(measure, rule.outer);
    const auto text = dump(json{{"measure", to_json(measure)}, {"q", to_json(q)}});
    std::optional<std::string> data_out;
    if (!o.out.empty()) {
        write_text_file(o.out, text);
        man.outputs.push_back(o.out);
        data_out = o.out;
    }
    out << text;
    man.emit(manifest_path(o.manifest, data_out), err);
    return kExitOk;
}

/// Entry point; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Monte Carlo simulator and diagnostics for volatility-gated AR(n) trend following", "hybridfx"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print version and PRNG identifier");

    Options o;
    auto add_manifest = [&](CLI::App* sub) {
        sub->add_option("--manifest", o.manifest, "Manifest path (default: <output>.manifest.json, else stderr)");
    };

    auto* sim = app.add_subcommand("simulate", "Simulate the hybrid or pure trend-following process");
    sim->add_option("--n", o.sim.n, "AR order")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--m", o.sim.m, "Number of vol terms")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--alpha", o.sim.alpha, "Noise scale")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--steps", o.sim.steps, "Number of steps")->capture_default_str();
    sim->add_option("--seed", o.sim.seed, "PRNG seed")->required();
    sim->add_option("--mode", o.mode, "hybrid | pure-trend")
        ->capture_default_str()
        ->check(CLI::IsMember({"hybrid", "pure-trend"}));
    sim->add_option("--cov", o.cov, "Covariance JSON path or equicorrelated:<rho>,<sigma>");
    sim->add_flag("--record-internals", o.sim.record_internals, "Also write vol levels Y_1..Y_m");
    sim->add_option("--out", o.out, "Output CSV")->required();
    sim->add_option("--burn-in", o.sim_drop, "Leading rows left out of the CSV")->capture_default_str();
    sim->add_option("--lag", o.sim.lag, "Signal lag: 0 = same-step vol move, 1 = previous step")
        ->capture_default_str()
        ->check(CLI::Range(0u, 1u));
    sim->add_option("--vol-mode", o.vol_mode, "level | log: increments act on Y or ln Y")
        ->capture_default_str()
        ->check(CLI::IsMember({"level", "log"}));
    sim->add_option("--initial-vol", o.sim.initial_vol, "Starting vol level")->capture_default_str();
    sim->add_option("--replicas", o.replicas, "Independent replicas (seed, seed+1, ...)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_manifest(sim);

    auto add_analysis_flags = [&](CLI::App* sub) {
        sub->add_option("--n", o.n, "AR order used in the flip definition")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--window", o.window, "Realized-vol window")->capture_default_str()->check(CLI::Range(2ul, 1ul << 40));
        sub->add_option("--burn-in", o.burn_in, "Leading values excluded (default: n)");
        sub->add_option("--min-count", o.min_count, "Minimum tail count for decay fit points")->capture_default_str();
        sub->add_option("--column", o.column, "Header name of the return column");
        sub->add_flag("--prices", o.prices, "Input holds price levels; convert to log-returns");
    };

    auto* ana = app.add_subcommand("analyze", "Compute all diagnostics for one return series");
    ana->add_option("--input", o.input, "Return CSV")->required()->check(CLI::ExistingFile);
    add_analysis_flags(ana);
    ana->add_option("--out-bundle", o.out_bundle, "Bundle JSON (default: stdout)");
    ana->add_option("--out-plots", o.out_plots, "Directory for ccdf/npp/phase/rv_phase CSVs");
    ana->add_option("--max-plot-points", o.max_plot_points, "Cap on plot points embedded in the JSON (0 = all)")
        ->capture_default_str();
    add_manifest(ana);

    auto* cmp = app.add_subcommand("compare", "Analyze two series side by side");
    cmp->add_option("--a", o.input, "First return CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--b", o.input_b, "Second return CSV")->required()->check(CLI::ExistingFile);
    add_analysis_flags(cmp);
    cmp->add_option("--out", o.out, "Summary JSON (default: stdout)");
    add_manifest(cmp);

    auto* cal = app.add_subcommand("calibrate-cov", "Estimate the vol-increment covariance from a vols CSV");
    cal->add_option("--input", o.input, "Vols CSV")->required()->check(CLI::ExistingFile);
    cal->add_option("--out", o.out, "Covariance JSON (default: stdout)");
    cal->add_option("--vol-scale", o.vol_scale, "Divide quotes by this (100 for percent)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cal->add_option("--ridge", o.ridge, "Add ridge * I before the definiteness check")->capture_default_str();
    cal->add_flag("--log", o.log_levels, "Use increments of ln Y");
    add_manifest(cal);

    auto* qp = app.add_subcommand("qprob", "Sign-sum measure and flip probability q for a covariance");
    qp->add_option("--cov", o.cov, "Covariance JSON path or equicorrelated:<rho>,<sigma>")->required();
    qp->add_option("--m", o.m, "Number of vol terms")->capture_default_str()->check(CLI::PositiveNumber);
    qp->add_option("--samples", o.samples, "Monte Carlo draws")->capture_default_str()->check(CLI::Range(1000ul, 1ul << 40));
    qp->add_option("--seed", o.seed, "PRNG seed")->required();
    qp->add_option("--outer", o.outer, "Outer threshold on the sign sum")->capture_default_str();
    qp->add_option("--out", o.out, "Also write the JSON here");
    add_manifest(qp);

    std::vector<std::string> argv_store{"hybridfx"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    CLI::App* active = nullptr;
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (show_version) {
            out << version_text();
            return kExitOk;
        }
        for (auto* sub : {sim, ana, cmp, cal, qp})
            if (sub->parsed()) active = sub;
        if (!active) {
            err << app.help();
            return kExitUsage;
        }
    } catch (const CLI::CallForHelp&) {
        out << (active ? active->help() : app.help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (auto* sub : {sim, ana, cmp, cal, qp})
            if (sub->parsed()) active = sub;
        err << (active ? active->help() : app.help());
        return kExitUsage;
    }

    Manifest man;
    man.args = args;
    try {
        if (active == sim) return cmd_simulate(o, man, out, err);
        if (active == ana) return cmd_analyze(o, man, out, err);
        if (active == cmp) return cmd_compare(o, man, out, err);
        if (active == cal) return cmd_calibrate_cov(o, man, out, err);
        return cmd_qprob(o, man, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << active->help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace hybridfx::cli
