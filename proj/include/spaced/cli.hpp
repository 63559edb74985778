#pragma once

// Command-line surface. `run_cli` is the whole program; tools/spaced.cpp only
// forwards argv to it so the dispatcher can be exercised in-process.
//
// Exit codes: 0 success, 2 invalid input or usage, 1 internal failure.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "spaced/analysis.hpp"
#include "spaced/control.hpp"
#include "spaced/error.hpp"
#include "spaced/fitting.hpp"
#include "spaced/io.hpp"
#include "spaced/metrics.hpp"
#include "spaced/policies.hpp"
#include "spaced/report.hpp"
#include "spaced/simulator.hpp"

namespace spaced {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;

// stderr logger; SPACED_LOG=debug|info|warn picks the level (default warn).
inline std::shared_ptr<spdlog::logger> cli_logger() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_color_mt("spaced");
        l->set_pattern("[%l] %v");
        return l;
    }();
    const char* level = std::getenv("SPACED_LOG");
    const std::string name = level ? level : "warn";
    logger->set_level(name == "debug" ? spdlog::level::debug
                      : name == "info" ? spdlog::level::info
                                       : spdlog::level::warn);
    return logger;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

inline std::string format_q(double q) {
    std::ostringstream out;
    out << q;
    return out.str();
}

struct FitArgs {
    std::string input;
    std::string format;
    bool strict = false;
    std::string kind = "exponential";
    double learning_rate = 1.0;
    int epochs = 3000;
    double l2 = 0.0;
    double clamp = 0.01;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = ".";
};

struct SimulateArgs {
    std::string config;
    int learners = 100;
    int items = 100;
    double horizon = 30.0;
    double rate = 1.0;
    int session_size = 10;
    std::string kind = "exponential";
    double alpha = 0.4;
    double beta = 0.6;
    double rate_log_mean = 0.0;
    double rate_log_sd = 0.5;
    std::string ground_truth;
    std::string scheduler;
    std::string arms = "select,difficulty,random";
    std::string q = "1,2,4";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = ".";
};

struct AnalyzeArgs {
    std::vector<std::string> logs;
    std::string out_dir = ".";
    double epsilon = kDefaultRecallEpsilon;
    double min_active_days = 2.0;
    int min_learners = 5;
    std::string reviews = "2,3,4,5,6";
    bool svg = false;
};

struct EvaluateArgs {
    std::string input;
    std::vector<std::string> params;
    double holdout = 0.2;
    std::uint64_t seed = 0;
    std::string correlation = "spearman";
    std::string out_dir = ".";
};

struct SessionArgs {
    std::string state;
    std::string state_out;
    std::string params;
    std::string policy;
    double q = 1.0;
    int size = 10;
    std::uint64_t seed = 0;
    std::int64_t now = 0;
};

struct VerifyArgs {
    int grid = 10;
    double d = 2.0;
    double q = 1.0;
    double alpha = 0.3;
    double beta = 0.5;
    std::optional<double> c1;
    std::optional<double> c2;
    double u = 1.0;
    double tolerance = 1e-6;
    std::string out_dir;
};

struct IngestArgs {
    std::string input;
    std::string format;
    bool strict = false;
    std::string out_dir = ".";
};

inline std::optional<LogFormat> parse_format(const std::string& text) {
    if (text.empty()) return std::nullopt;
    if (text == "jsonl") return LogFormat::Jsonl;
    if (text == "csv") return LogFormat::Csv;
    throw Error(ErrorCode::InvalidArgument, "unknown format '" + text + "'");
}

inline IngestReport load_events(const std::string& path, const std::string& format, bool strict) {
    auto report = ingest(path, parse_format(format), strict);
    auto log = cli_logger();
    for (const auto& d : report.diagnostics) log->warn("{}:{}: {}", path, d.line, d.message);
    log->info("{}: {} records, {} dropped, {} duplicates, {} learners", path, report.records_read,
              report.dropped_invalid, report.duplicates_removed, report.learners);
    return report;
}

inline int run_fit(const FitArgs& a, std::ostream& out) {
    const auto data = load_events(a.input, a.format, a.strict);
    FitConfig cfg;
    cfg.kind = parse_model_kind(a.kind);
    cfg.learning_rate = a.learning_rate;
    cfg.epochs = a.epochs;
    cfg.l2_item = a.l2;
    cfg.recall_clamp = a.clamp;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    const auto result = fit(data.events, cfg);

    const fs::path dir(a.out_dir);
    write_text_file(dir / "params.json", params_to_text(result.params));
    Json report{{"final_loss", result.report.final_loss},
                {"epochs_run", result.report.epochs_run},
                {"exposures", result.report.exposures},
                {"loss_trace", result.report.loss_trace}};
    write_text_file(dir / "fit_report.json", report.dump(2) + "\n");

    RunManifest manifest;
    manifest.subcommand = "fit";
    manifest.config = Json{{"kind", a.kind}, {"learning_rate", a.learning_rate}, {"epochs", a.epochs},
                           {"l2_item", a.l2}, {"recall_clamp", a.clamp}, {"threads", a.threads},
                           {"strict", a.strict}};
    manifest.seed = a.seed;
    manifest.inputs = {a.input};
    manifest.outputs = {(dir / "params.json").string(), (dir / "fit_report.json").string()};
    manifest.write(dir / "manifest.json");

    out << "alpha=" << result.params.alpha << " beta=" << result.params.beta
        << " items=" << result.params.initial_rates.size() << " loss=" << result.report.final_loss
        << " epochs=" << result.report.epochs_run << "\n";
    return kExitOk;
}

inline SimConfig simulate_config(const SimulateArgs& a, const CLI::App& cmd) {
    SimConfig cfg;
    const bool from_file = !a.config.empty();
    if (from_file) cfg = sim_config_from_json(read_json_file(a.config));
    auto given = [&](const char* flag) { return !from_file || cmd.count(flag) > 0; };

    if (given("--learners")) cfg.n_learners = a.learners;
    if (given("--items")) cfg.n_items = a.items;
    if (given("--horizon")) cfg.horizon_days = a.horizon;
    if (given("--rate")) cfg.mean_sessions_per_day = a.rate;
    if (given("--session-size")) cfg.session_size = a.session_size;
    if (given("--rate-log-mean")) cfg.initial_rate_log_mean = a.rate_log_mean;
    if (given("--rate-log-sd")) cfg.initial_rate_log_sd = a.rate_log_sd;
    if (given("--seed")) cfg.seed = a.seed;
    if (!a.ground_truth.empty()) {
        cfg.ground_truth = read_params(a.ground_truth);
    } else if (!from_file || cmd.count("--kind") || cmd.count("--alpha") || cmd.count("--beta")) {
        if (given("--kind")) cfg.ground_truth.kind = parse_model_kind(a.kind);
        if (given("--alpha")) cfg.ground_truth.alpha = a.alpha;
        if (given("--beta")) cfg.ground_truth.beta = a.beta;
    }
    if (!a.scheduler.empty()) cfg.scheduler = read_params(a.scheduler);
    if (given("--arms") || cfg.arms.empty()) {
        cfg.arms.clear();
        const auto qs = split_list(a.q);
        for (const auto& name : split_list(a.arms)) {
            const PolicyKind kind = parse_policy_kind(name);
            if (kind != PolicyKind::Select) {
                cfg.arms.push_back(PolicySpec{kind, 1.0, cfg.session_size, 0, name});
                continue;
            }
            if (qs.empty()) throw Error(ErrorCode::InvalidArgument, "--q needs at least one value");
            for (const auto& q_text : qs) {
                const double q = std::stod(q_text);
                const std::string label = qs.size() == 1 ? "select" : "select_q" + format_q(q);
                cfg.arms.push_back(PolicySpec{PolicyKind::Select, q, cfg.session_size, 0, label});
            }
        }
    }
    return cfg;
}

inline int run_simulate(const SimulateArgs& a, const CLI::App& cmd, std::ostream& out) {
    SimConfig cfg = simulate_config(a, cmd);
    cfg.threads = a.threads;
    const auto result = run_simulation(cfg);

    const fs::path dir(a.out_dir);
    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.config = to_json(cfg);
    manifest.config["ground_truth"] = to_json(result.ground_truth);
    manifest.config["threads"] = a.threads;
    manifest.config["stream_derivation"] = "derive_seed(seed, {arm_index, learner_index})";
    manifest.seed = cfg.seed;
    if (!a.config.empty()) manifest.inputs.push_back(a.config);
    if (!a.ground_truth.empty()) manifest.inputs.push_back(a.ground_truth);
    if (!a.scheduler.empty()) manifest.inputs.push_back(a.scheduler);

    Json sessions = Json::object();
    for (const auto& arm : result.arms) {
        const auto path = dir / (arm.arm + ".jsonl");
        write_text_file(path, events_to_jsonl(arm.events));
        manifest.outputs.push_back(path.string());
        sessions[arm.arm] = arm.session_count;
        out << arm.arm << ": " << arm.events.size() << " events in " << arm.session_count << " sessions\n";
    }
    manifest.config["session_counts"] = sessions;
    write_text_file(dir / "ground_truth.json", params_to_text(result.ground_truth));
    manifest.outputs.push_back((dir / "ground_truth.json").string());
    manifest.write(dir / "manifest.json");
    return kExitOk;
}

inline int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
    std::map<std::string, std::vector<ReviewEvent>> logs;
    std::vector<std::string> inputs;
    for (const auto& spec : a.logs) {
        const auto eq = spec.find('=');
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        const std::string arm = eq == std::string::npos ? fs::path(path).stem().string() : spec.substr(0, eq);
        if (logs.count(arm)) throw Error(ErrorCode::InvalidArgument, "arm '" + arm + "' given twice");
        logs[arm] = load_events(path, "", false).events;
        inputs.push_back(path);
    }
    std::vector<int> reviews;
    for (const auto& r : split_list(a.reviews)) reviews.push_back(std::stoi(r));

    AnalysisOptions options;
    options.epsilon = a.epsilon;
    options.min_active_days = a.min_active_days;
    options.min_learners_per_item = a.min_learners;
    const auto report = compare_arms(logs, standard_bins(reviews), options);

    const fs::path dir(a.out_dir);
    write_text_file(dir / "report.csv", report_csv(report));
    write_text_file(dir / "tests.csv", tests_csv(report));
    RunManifest manifest;
    manifest.subcommand = "analyze";
    manifest.config = Json{{"epsilon", a.epsilon}, {"min_active_days", a.min_active_days},
                           {"min_learners_per_item", a.min_learners}, {"reviews", reviews},
                           {"excluded_items", report.excluded_items}};
    manifest.inputs = inputs;
    manifest.outputs = {(dir / "report.csv").string(), (dir / "tests.csv").string()};
    if (a.svg) {
        write_text_file(dir / "report.svg", report_svg(report));
        manifest.outputs.push_back((dir / "report.svg").string());
    }
    manifest.write(dir / "manifest.json");

    std::size_t significant = 0, populated = 0;
    for (const auto& t : report.tests) {
        if (t.no_data) continue;
        ++populated;
        significant += t.significant ? 1 : 0;
    }
    out << "arms=" << report.arms.size() << " bins=" << report.bins.size() << " tests=" << populated
        << " significant=" << significant << "\n";
    return kExitOk;
}

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const auto data = load_events(a.input, "", false);
    EvaluationOptions options;
    options.holdout_fraction = a.holdout;
    options.seed = a.seed;
    if (a.correlation == "spearman") {
        options.correlation = CorrelationKind::Spearman;
    } else if (a.correlation == "pearson") {
        options.correlation = CorrelationKind::Pearson;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown correlation '" + a.correlation + "'");
    }

    std::vector<EvaluationResult> results;
    for (const auto& path : a.params) results.push_back(evaluate_model(data.events, read_params(path), options));
    const auto table = metrics_json(results);

    const fs::path dir(a.out_dir);
    write_text_file(dir / "metrics.json", table.dump(2) + "\n");
    RunManifest manifest;
    manifest.subcommand = "evaluate";
    manifest.config = Json{{"holdout_fraction", a.holdout}, {"correlation", a.correlation}};
    manifest.seed = a.seed;
    manifest.inputs = {a.input};
    manifest.inputs.insert(manifest.inputs.end(), a.params.begin(), a.params.end());
    manifest.outputs = {(dir / "metrics.json").string()};
    manifest.write(dir / "manifest.json");

    out << metrics_table(results);
    return kExitOk;
}

inline int run_session(const SessionArgs& a, std::ostream& out) {
    auto state = learner_state_from_json(read_json_file(a.state));
    const auto params = read_params(a.params);
    if (!a.policy.empty()) state.policy = parse_policy_kind(a.policy);

    // Items the learner has never met get fresh states, in model order.
    std::map<std::string, std::size_t> known;
    for (std::size_t i = 0; i < state.states.size(); ++i) known[state.states[i].item_id] = i;
    for (const auto& [item, rate] : params.initial_rates) {
        if (!known.count(item)) state.states.push_back(MemoryState{item, 0, 0, std::nullopt});
    }

    PolicySpec spec{state.policy, a.q, a.size, a.seed, ""};
    spec.validate();
    Rng rng(derive_seed(a.seed, {0x73657373ULL}));
    std::vector<std::string> session;
    switch (state.policy) {
    case PolicyKind::Select:
        session = build_session_select(state.states, params, spec, a.now, rng);
        break;
    case PolicyKind::Difficulty: {
        if (!state.cursor || state.cursor->ordering.empty()) state.cursor = make_difficulty_cursor(params);
        auto [chosen, next] = build_session_difficulty(*state.cursor, a.size);
        session = std::move(chosen);
        state.cursor = std::move(next);
        break;
    }
    case PolicyKind::Random: {
        std::vector<std::string> pool;
        for (const auto& s : state.states) pool.push_back(s.item_id);
        std::sort(pool.begin(), pool.end());
        session = build_session_random(pool, std::min<int>(a.size, static_cast<int>(pool.size())), rng);
        break;
    }
    }

    const std::string target = a.state_out.empty() ? a.state : a.state_out;
    RunManifest manifest;
    manifest.subcommand = "session";
    manifest.config = Json{{"policy", std::string(to_string(state.policy))}, {"q", a.q}, {"size", a.size},
                           {"now", a.now}};
    manifest.seed = a.seed;
    manifest.inputs = {a.state, a.params};
    manifest.outputs = {target};
    const Json manifest_json = manifest.to_json(); // digest the state before overwriting it
    write_text_file(target, to_json(state).dump(2) + "\n");
    write_text_file(target + ".manifest.json", manifest_json.dump(2) + "\n");

    out << Json(session).dump() << "\n";
    return kExitOk;
}

inline int run_verify(const VerifyArgs& a, std::ostream& out) {
    ControlConfig cfg{a.q};
    double c1 = 0.0, c2 = 0.0;
    if (a.c1 || a.c2) {
        if (!(a.c1 && a.c2)) throw Error(ErrorCode::InvalidArgument, "--c1 and --c2 go together");
        c1 = *a.c1;
        c2 = *a.c2;
    } else {
        const auto constants = limit_constants(a.alpha, a.beta);
        c1 = constants.c1;
        c2 = constants.c2;
    }
    ResidualGridSpec grid;
    grid.points_per_axis = a.grid;
    grid.u = a.u;
    const auto samples = residual_grid(a.d, c1, c2, a.alpha, a.beta, cfg, grid);

    std::ostringstream csv;
    csv << "m,n,delta,residual\n" << std::setprecision(17);
    double worst = 0.0;
    for (const auto& s : samples) {
        csv << s.m << ',' << s.n << ',' << s.delta << ',' << s.residual << '\n';
        worst = std::max(worst, std::abs(s.residual));
    }
    out << csv.str();
    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        write_text_file(dir / "residuals.csv", csv.str());
        RunManifest manifest;
        manifest.subcommand = "verify-hjb";
        manifest.config = Json{{"grid", a.grid}, {"d", a.d}, {"q", a.q}, {"alpha", a.alpha}, {"beta", a.beta},
                               {"c1", c1}, {"c2", c2}, {"u", a.u}, {"tolerance", a.tolerance},
                               {"max_abs_residual", worst}, {"points", samples.size()}};
        manifest.outputs = {(dir / "residuals.csv").string()};
        manifest.write(dir / "manifest.json");
    }
    cli_logger()->info("verify-hjb: {} points, max |residual| = {:.3e}", samples.size(), worst);
    if (!(worst < a.tolerance)) {
        cli_logger()->error("max |residual| {:.3e} exceeds {:.1e}", worst, a.tolerance);
        return kExitInternal;
    }
    return kExitOk;
}

inline int run_ingest(const IngestArgs& a, std::ostream& out) {
    const auto report = load_events(a.input, a.format, a.strict);
    const fs::path dir(a.out_dir);
    write_text_file(dir / "events.jsonl", events_to_jsonl(report.events));
    RunManifest manifest;
    manifest.subcommand = "ingest";
    manifest.config = Json{{"format", a.format.empty() ? std::string("auto") : a.format}, {"strict", a.strict},
                           {"records_read", report.records_read}, {"dropped_invalid", report.dropped_invalid},
                           {"duplicates_removed", report.duplicates_removed}, {"learners", report.learners}};
    manifest.inputs = {a.input};
    manifest.outputs = {(dir / "events.jsonl").string()};
    manifest.write(dir / "manifest.json");
    out << "read=" << report.records_read << " kept=" << report.events.size()
        << " dropped=" << report.dropped_invalid << " duplicates=" << report.duplicates_removed
        << " learners=" << report.learners << "\n";
    return kExitOk;
}

} // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Spaced-repetition scheduling and trial-analysis toolkit", "spaced"};
    app.require_subcommand(1);

    detail::FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit memory-model parameters to a review log");
    fit_cmd->add_option("--input", fit_args.input, "Review log (JSONL or CSV)")->required();
    fit_cmd->add_option("--format", fit_args.format, "jsonl|csv (default: by extension)");
    fit_cmd->add_flag("--strict", fit_args.strict, "Abort on the first malformed record");
    fit_cmd->add_option("--kind", fit_args.kind, "exponential|power_law");
    fit_cmd->add_option("--learning-rate", fit_args.learning_rate);
    fit_cmd->add_option("--epochs", fit_args.epochs);
    fit_cmd->add_option("--l2", fit_args.l2, "Penalty on log initial rates");
    fit_cmd->add_option("--clamp", fit_args.clamp, "Recall-probability clamp");
    fit_cmd->add_option("--seed", fit_args.seed);
    fit_cmd->add_option("--threads", fit_args.threads);
    fit_cmd->add_option("--out-dir", fit_args.out_dir);

    detail::SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate learners under several policies");
    sim_cmd->add_option("--config", sim_args.config, "JSON config; flags given explicitly override it");
    sim_cmd->add_option("--learners", sim_args.learners, "Learners per arm");
    sim_cmd->add_option("--items", sim_args.items);
    sim_cmd->add_option("--horizon", sim_args.horizon, "Days");
    sim_cmd->add_option("--rate", sim_args.rate, "Mean sessions per day");
    sim_cmd->add_option("--session-size", sim_args.session_size);
    sim_cmd->add_option("--kind", sim_args.kind, "Ground-truth model kind");
    sim_cmd->add_option("--alpha", sim_args.alpha);
    sim_cmd->add_option("--beta", sim_args.beta);
    sim_cmd->add_option("--rate-log-mean", sim_args.rate_log_mean, "Mean of log initial rates");
    sim_cmd->add_option("--rate-log-sd", sim_args.rate_log_sd, "Std. dev. of log initial rates");
    sim_cmd->add_option("--ground-truth", sim_args.ground_truth, "ModelParams JSON for the ground truth");
    sim_cmd->add_option("--scheduler", sim_args.scheduler, "ModelParams JSON used by SELECT/DIFFICULTY");
    sim_cmd->add_option("--arms", sim_args.arms, "Comma-separated policies");
    sim_cmd->add_option("--q", sim_args.q, "Comma-separated q values for SELECT");
    sim_cmd->add_option("--seed", sim_args.seed);
    sim_cmd->add_option("--threads", sim_args.threads);
    sim_cmd->add_option("--out-dir", sim_args.out_dir);

    detail::AnalyzeArgs an_args;
    auto* an_cmd = app.add_subcommand("analyze", "Compare arms by normalized empirical forgetting rate");
    an_cmd->add_option("logs", an_args.logs, "ARM=PATH (or PATH, arm = file stem)")->required();
    an_cmd->add_option("--out-dir", an_args.out_dir);
    an_cmd->add_option("--epsilon", an_args.epsilon);
    an_cmd->add_option("--min-active-days", an_args.min_active_days);
    an_cmd->add_option("--min-learners", an_args.min_learners, "Minimum learners per item");
    an_cmd->add_option("--reviews", an_args.reviews, "Comma-separated review counts per duration window");
    an_cmd->add_flag("--svg", an_args.svg, "Also write report.svg");

    detail::EvaluateArgs ev_args;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score memory models on held-out reviews");
    ev_cmd->add_option("--input", ev_args.input)->required();
    ev_cmd->add_option("--params", ev_args.params, "ModelParams JSON (repeatable)")->required();
    ev_cmd->add_option("--holdout", ev_args.holdout);
    ev_cmd->add_option("--seed", ev_args.seed);
    ev_cmd->add_option("--correlation", ev_args.correlation, "spearman|pearson");
    ev_cmd->add_option("--out-dir", ev_args.out_dir);

    detail::SessionArgs se_args;
    auto* se_cmd = app.add_subcommand("session", "Build the next study session for one learner");
    se_cmd->add_option("--state", se_args.state, "Learner state JSON")->required();
    se_cmd->add_option("--state-out", se_args.state_out, "Where to write the updated state (default: --state)");
    se_cmd->add_option("--params", se_args.params)->required();
    se_cmd->add_option("--policy", se_args.policy, "select|difficulty|random");
    se_cmd->add_option("--q", se_args.q);
    se_cmd->add_option("--size", se_args.size);
    se_cmd->add_option("--seed", se_args.seed);
    se_cmd->add_option("--now", se_args.now, "Epoch seconds")->required();

    detail::VerifyArgs ve_args;
    auto* ve_cmd = app.add_subcommand("verify-hjb", "Print HJB residuals of the loss family on a grid");
    ve_cmd->add_option("--grid", ve_args.grid, "Points per axis");
    ve_cmd->add_option("--d", ve_args.d);
    ve_cmd->add_option("--q", ve_args.q);
    ve_cmd->add_option("--alpha", ve_args.alpha);
    ve_cmd->add_option("--beta", ve_args.beta);
    ve_cmd->add_option("--c1", ve_args.c1, "Default: limit constants from alpha, beta");
    ve_cmd->add_option("--c2", ve_args.c2);
    ve_cmd->add_option("--u", ve_args.u, "Study intensity");
    ve_cmd->add_option("--tolerance", ve_args.tolerance);
    ve_cmd->add_option("--out-dir", ve_args.out_dir, "Also write residuals.csv and a manifest here");

    detail::IngestArgs in_args;
    auto* in_cmd = app.add_subcommand("ingest", "Validate a review log and write it in canonical form");
    in_cmd->add_option("--input", in_args.input)->required();
    in_cmd->add_option("--format", in_args.format, "jsonl|csv (default: by extension)");
    in_cmd->add_flag("--strict", in_args.strict);
    in_cmd->add_option("--out-dir", in_args.out_dir);

    if (args.empty()) {
        err << app.help();
        return kExitValidation;
    }
    std::vector<const char*> argv{"spaced"};
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (*fit_cmd) return detail::run_fit(fit_args, out);
        if (*sim_cmd) return detail::run_simulate(sim_args, *sim_cmd, out);
        if (*an_cmd) return detail::run_analyze(an_args, out);
        if (*ev_cmd) return detail::run_evaluate(ev_args, out);
        if (*se_cmd) return detail::run_session(se_args, out);
        if (*ve_cmd) return detail::run_verify(ve_args, out);
        if (*in_cmd) return detail::run_ingest(in_args, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.is_validation() ? kExitValidation : kExitInternal;
    } catch (const std::invalid_argument& e) {
        err << "error: invalid number: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitValidation;
}

} // namespace spaced
