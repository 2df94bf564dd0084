#include "concatmc/cli_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "concatmc/errors.hpp"
#include "concatmc/estimate.hpp"
#include "concatmc/json_io.hpp"
#include "concatmc/oracle.hpp"
#include "concatmc/pasting.hpp"

namespace concatmc {

namespace {

// One line of results.csv; detail is merged into the JSON report's row.
struct ResultRow {
    double estimate = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
    bool pass = true;
    nlohmann::json detail = nlohmann::json::object();
};

struct CommandOutput {
    std::vector<ResultRow> rows;
    std::optional<std::string> paths_csv;  // simulate's per-path table
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const char* terminal_name(TerminalReason r) {
    switch (r) {
        case TerminalReason::Died: return "died";
        case TerminalReason::SegmentImmortal: return "immortal";
        case TerminalReason::MaxRevivals: return "max-revivals";
        case TerminalReason::Censored: return "censored";
        case TerminalReason::RevivalUndefined: return "revival-undefined";
    }
    return "unknown";
}

// Shared scalar parameters most commands need.
struct RunParams {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double sigma = 3.0;
    McOptions opts;
};

RunParams run_params(const nlohmann::json& doc) {
    RunParams p;
    const auto& seed = require_member(doc, "seed");
    if (!seed.is_number_integer() ||
        (seed.is_number_integer() && !seed.is_number_unsigned() &&
         seed.get<std::int64_t>() < 0))
        throw ConfigError("seed: expected a nonnegative integer");
    p.seed = seed.get<std::uint64_t>();
    const std::int64_t n = get_integer(doc, "samples", 100000);
    if (n < 1) throw ConfigError("samples: expected a positive integer");
    p.samples = static_cast<std::size_t>(n);
    p.sigma = get_number(doc, "tolerance_sigma", 3.0);
    if (!(p.sigma > 0.0)) throw ConfigError("tolerance_sigma: must be > 0");
    return p;
}

SpacePoint start_point(const nlohmann::json& doc) {
    return parse_point(require_member(doc, "start"));
}

BoundedFn function_or_one(const nlohmann::json& doc, const std::string& key) {
    if (doc.contains(key)) return parse_function(doc.at(key));
    return BoundedFn::constant(1.0);
}

std::vector<BoundedFn> function_battery(const nlohmann::json& doc,
                                        const std::string& key,
                                        bool default_one) {
    std::vector<BoundedFn> fs;
    if (doc.contains(key)) {
        const auto& arr = doc.at(key);
        if (!arr.is_array())
            throw ConfigError(key + ": expected an array of functions");
        for (const auto& f : arr) fs.push_back(parse_function(f));
    } else if (default_one) {
        fs.push_back(BoundedFn::constant(1.0));
    }
    return fs;
}

// The concatenation the sampling commands run on: the declared plan, or the
// single named process wrapped as a one-stage plan.
ConcatenationPlan target_plan(const ExperimentConfig& cfg) {
    if (cfg.plan) return *cfg.plan;
    if (cfg.process) {
        ConcatenationPlan plan;
        plan.stages.push_back(Stage{cfg.processes.at(*cfg.process), {}});
        plan.truncation = parse_truncation(cfg.raw);
        validate(plan);
        return plan;
    }
    throw ConfigError("config needs a \"plan\" or \"process\" section");
}

nlohmann::json report_detail(const EstimateReport& r) {
    return {{"value", r.value},
            {"std_err", r.std_err},
            {"bias_bound", r.bias_bound},
            {"censored_fraction", r.censored_fraction},
            {"flagged", r.flagged}};
}

// pass iff the estimate is compatible with the optional "expect" reference
// within sigma standard errors plus the truncation bias budget.
ResultRow estimate_row(const nlohmann::json& doc, const EstimateReport& r,
                       double sigma) {
    ResultRow row;
    row.estimate = r.value;
    row.std_err = r.std_err;
    row.n = r.n_samples;
    row.detail = report_detail(r);
    if (doc.contains("expect")) {
        const double expect = require_number(doc, "expect");
        row.pass = std::abs(r.value - expect) <= r.error_budget(sigma);
        row.detail["expect"] = expect;
    }
    return row;
}

CommandOutput cmd_simulate(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    const ConcatenationPlan plan = target_plan(cfg);
    const int start_stage =
        static_cast<int>(get_integer(cfg.raw, "start_stage", 1));
    const SpacePoint start = start_point(cfg.raw);

    std::ostringstream paths;
    paths << "replicate,segments,lifetime,censored,terminal\n";
    BatchResult batch;
    for (std::size_t i = 0; i < p.samples; ++i) {
        RngStream rng(p.seed, i);
        const ConcatPath cp = sample_concatenated(plan, start_stage, start, rng);
        const double lifetime =
            cp.censored ? cp.censor_time : cp.total_lifetime();
        paths << i << ',' << cp.segments.size() << ',' << fmt(lifetime) << ','
              << (cp.censored ? "true" : "false") << ','
              << terminal_name(cp.terminal) << '\n';
        batch.values.push_back(lifetime);
        batch.censored.push_back(cp.censored ? 1 : 0);
        batch.tail_bounds.push_back(0.0);
    }
    const EstimateReport r = summarize(batch, p.seed, 0.0, p.opts.censor_cap);
    ResultRow row;  // informational summary (mean observed lifetime)
    row.estimate = r.value;
    row.std_err = r.std_err;
    row.n = r.n_samples;
    row.detail = report_detail(r);
    row.detail["statistic"] = "mean observed lifetime";
    return {{row}, paths.str()};
}

CommandOutput cmd_resolvent(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    const double alpha = require_number(cfg.raw, "alpha");
    const BoundedFn f = function_or_one(cfg.raw, "f");
    const SpacePoint start = start_point(cfg.raw);
    EstimateReport r;
    if (cfg.plan) {
        const int start_stage =
            static_cast<int>(get_integer(cfg.raw, "start_stage", 1));
        r = mc_resolvent(*cfg.plan, start_stage, start, alpha, f, p.samples,
                         p.seed, p.opts);
    } else if (cfg.process) {
        r = mc_resolvent(cfg.processes.at(*cfg.process), start, alpha, f,
                         p.samples, p.seed, parse_truncation(cfg.raw).horizon,
                         p.opts);
    } else {
        throw ConfigError("config needs a \"plan\" or \"process\" section");
    }
    return {{estimate_row(cfg.raw, r, p.sigma)}, {}};
}

CommandOutput cmd_semigroup(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    const double t = require_number(cfg.raw, "time");
    const BoundedFn f = function_or_one(cfg.raw, "f");
    const SpacePoint start = start_point(cfg.raw);
    EstimateReport r;
    if (cfg.plan) {
        const int start_stage =
            static_cast<int>(get_integer(cfg.raw, "start_stage", 1));
        r = mc_semigroup(*cfg.plan, start_stage, start, t, f, p.samples, p.seed,
                         p.opts);
    } else if (cfg.process) {
        r = mc_semigroup(cfg.processes.at(*cfg.process), start, t, f, p.samples,
                         p.seed, p.opts);
    } else {
        throw ConfigError("config needs a \"plan\" or \"process\" section");
    }
    return {{estimate_row(cfg.raw, r, p.sigma)}, {}};
}

StoppingRule parse_stopping(const nlohmann::json& doc) {
    if (!doc.contains("stopping")) return StopAtRevival{1};
    const auto& j = doc.at("stopping");
    const std::string kind = require_string(j, "kind");
    if (kind == "revival")
        return StopAtRevival{static_cast<int>(get_integer(j, "n", 1))};
    if (kind == "region") {
        std::vector<std::string> labels;
        std::vector<double> coords;
        if (j.contains("labels"))
            for (const auto& l : j.at("labels"))
                labels.push_back(l.get<std::string>());
        if (j.contains("coords"))
            for (const auto& c : j.at("coords"))
                coords.push_back(c.get<double>());
        if (labels.empty() && coords.empty())
            throw ConfigError("stopping: region needs labels or coords");
        StopAtRegion region;
        region.name = j.is_object() && j.contains("name")
                          ? require_string(j, "name")
                          : "region";
        // Tag-blind membership: the region describes base states, the
        // composite's states carry stage tags.
        region.contains = [labels = std::move(labels),
                           coords = std::move(coords)](const SpacePoint& p) {
            if (p.kind == SpacePoint::Kind::Label)
                return std::find(labels.begin(), labels.end(), p.label) !=
                       labels.end();
            if (p.kind == SpacePoint::Kind::Real)
                return std::find(coords.begin(), coords.end(), p.coord) !=
                       coords.end();
            return false;
        };
        return region;
    }
    throw ConfigError("stopping kind must be revival or region: " + kind);
}

// Exact continuation u(x) = U_alpha f(x) from the assembled block generator
// of the (finite, all-chain) plan.
OracleContinuation assembled_continuation(const ConcatenationPlan& plan,
                                          double alpha, const BoundedFn& f) {
    const auto sg = std::make_shared<SubGenerator>(
        assemble_concatenated(plan, static_cast<int>(plan.stages.size())));
    Eigen::VectorXd fvec(sg->size());
    for (int i = 0; i < sg->size(); ++i) {
        const std::string& key = sg->states[static_cast<std::size_t>(i)];
        const auto colon = key.find(':');
        fvec(i) = f(SpacePoint::label_point(std::stoi(key.substr(0, colon)),
                                            key.substr(colon + 1)));
    }
    const auto u = std::make_shared<Eigen::VectorXd>(
        exact_resolvent(*sg, alpha, fvec));
    return OracleContinuation{[sg, u](const SpacePoint& x) {
        if (x.is_cemetery()) return 0.0;
        if (x.kind != SpacePoint::Kind::Label)
            throw DomainError("oracle continuation: not a chain state");
        const int i = sg->index_of(std::to_string(x.tag) + ":" + x.label);
        if (i < 0)
            throw DomainError("oracle continuation: state outside the "
                              "assembled space: " + to_string(x));
        return (*u)(i);
    }};
}

CommandOutput cmd_check_dynkin(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    if (!cfg.plan) throw ConfigError("check-dynkin needs a \"plan\" section");
    const double alpha = require_number(cfg.raw, "alpha");
    const BoundedFn f = function_or_one(cfg.raw, "f");
    const SpacePoint start = start_point(cfg.raw);
    const int start_stage =
        static_cast<int>(get_integer(cfg.raw, "start_stage", 1));
    const StoppingRule stopping = parse_stopping(cfg.raw);

    Continuation continuation = NestedMcContinuation{};
    std::string continuation_kind = "nested";
    if (cfg.raw.contains("continuation")) {
        const auto& cj = cfg.raw.at("continuation");
        continuation_kind = require_string(cj, "kind");
        if (continuation_kind == "oracle")
            continuation = assembled_continuation(*cfg.plan, alpha, f);
        else if (continuation_kind == "nested")
            continuation = NestedMcContinuation{
                static_cast<std::size_t>(get_integer(cj, "m", 32))};
        else
            throw ConfigError("continuation kind must be oracle or nested: " +
                              continuation_kind);
    }
    const EstimateReport r =
        dynkin_residual(*cfg.plan, start_stage, start, stopping, alpha, f,
                        p.samples, p.seed, continuation, p.opts);
    ResultRow row;
    row.estimate = r.value;
    row.std_err = r.std_err;
    row.n = r.n_samples;
    row.pass = std::abs(r.value) <= r.error_budget(p.sigma);
    row.detail = report_detail(r);
    row.detail["continuation"] = continuation_kind;
    return {{row}, {}};
}

CommandOutput cmd_check_revival(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    if (!cfg.plan) throw ConfigError("check-revival needs a \"plan\" section");
    const SpacePoint start = start_point(cfg.raw);
    const int start_stage =
        static_cast<int>(get_integer(cfg.raw, "start_stage", 1));
    const int n_revival =
        static_cast<int>(get_integer(cfg.raw, "revival_index", 1));
    const std::vector<BoundedFn> fs = function_battery(cfg.raw, "fs", true);
    std::vector<GFunctional> gs;
    if (cfg.raw.contains("gs")) {
        for (const auto& g : cfg.raw.at("gs"))
            gs.push_back(parse_g_functional(g));
    } else {
        gs.push_back(GFunctional{});  // G = 1_{R^n < inf}
    }
    CommandOutput out;
    std::uint64_t salt = 0;
    for (const auto& f : fs) {
        for (const auto& g : gs) {
            const EstimateReport r =
                revival_formula_test(*cfg.plan, start_stage, start, n_revival,
                                     f, g, p.samples, p.seed + salt++, p.opts);
            ResultRow row;
            row.estimate = r.value;
            row.std_err = r.std_err;
            row.n = r.n_samples;
            row.pass = std::abs(r.value) <= r.error_budget(p.sigma);
            row.detail = report_detail(r);
            row.detail["f"] = f.name();
            row.detail["g_times"] = g.times;
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

CommandOutput cmd_check_pasting(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    if (!cfg.pasting)
        throw ConfigError("check-pasting needs a \"pasting\" section");
    const double alpha = require_number(cfg.raw, "alpha");
    const std::vector<BoundedFn> fs = function_battery(cfg.raw, "fs", true);
    const std::vector<BoundedFn> gm = function_battery(cfg.raw, "gs_minus", false);
    const std::vector<BoundedFn> gp = function_battery(cfg.raw, "gs_plus", false);

    const std::string engine_name =
        cfg.raw.contains("engine") ? require_string(cfg.raw, "engine") : "oracle";
    ConsistencyEngine engine = OracleEngine{};
    std::size_t n = 0;
    if (engine_name == "mc") {
        MonteCarloEngine mc;
        mc.n = p.samples;
        mc.seed = p.seed;
        mc.horizon = parse_truncation(cfg.raw).horizon;
        mc.opts = p.opts;
        n = mc.n;
        engine = mc;
    } else if (engine_name != "oracle") {
        throw ConfigError("engine must be oracle or mc: " + engine_name);
    }

    const ConsistencyReport report =
        check_consistency(*cfg.pasting, alpha, fs, gm, gp, engine);
    CommandOutput out;
    for (const auto& r : report.rows) {
        ResultRow row;
        row.estimate = r.residual;
        row.std_err = r.std_err;
        row.n = n;
        row.pass = r.pass;
        row.detail = {{"condition", r.condition}, {"point", r.point},
                      {"function", r.function},   {"lhs", r.lhs},
                      {"rhs", r.rhs},             {"tolerance", r.tolerance},
                      {"engine", engine_name}};
        out.rows.push_back(std::move(row));
    }
    return out;
}

CommandOutput cmd_check_projection(const ExperimentConfig& cfg) {
    const RunParams p = run_params(cfg.raw);
    if (!cfg.pasting)
        throw ConfigError("check-projection needs a \"pasting\" section");
    const double alpha = require_number(cfg.raw, "alpha");
    const BoundedFn f = function_or_one(cfg.raw, "f");
    std::vector<SpacePoint> points;
    if (cfg.raw.contains("points"))
        for (const auto& pt : cfg.raw.at("points"))
            points.push_back(parse_point(pt));
    const ProjectionReport report = projection_criterion_test(
        *cfg.pasting, alpha, f, points, p.samples, p.seed,
        parse_truncation(cfg.raw), p.opts);
    CommandOutput out;
    for (const auto& r : report.rows) {
        ResultRow row;
        row.estimate = r.difference;
        row.std_err = r.pooled_std_err;
        row.n = r.skipped ? 0 : p.samples;
        row.pass = r.pass;
        row.detail = {{"point", r.point},
                      {"odd_estimate", r.odd_estimate},
                      {"even_estimate", r.even_estimate},
                      {"bias_budget", r.bias_budget},
                      {"skipped", r.skipped},
                      {"note", r.note}};
        out.rows.push_back(std::move(row));
    }
    return out;
}

CommandOutput cmd_invert_laplace(const ExperimentConfig& cfg) {
    run_params(cfg.raw);  // seed stays mandatory even for deterministic commands
    if (!cfg.process)
        throw ConfigError("invert-laplace needs a \"process\" section");
    const auto* chain =
        std::get_if<FiniteChainSpec>(&cfg.processes.at(*cfg.process));
    if (!chain)
        throw UnsupportedError("invert-laplace: only finite chains have a "
                               "derivative oracle");
    const double t = require_number(cfg.raw, "time");
    const int order = static_cast<int>(get_integer(cfg.raw, "order", 64));
    const BoundedFn f = function_or_one(cfg.raw, "f");
    const SpacePoint start = start_point(cfg.raw);
    if (start.kind != SpacePoint::Kind::Label)
        throw ConfigError("invert-laplace: start must be a chain state");
    const int idx = chain->index_of(start.label);
    if (idx < 0)
        throw ConfigError("invert-laplace: unknown start state " + start.label);

    const SubGenerator sg = from_chain(*chain);
    Eigen::VectorXd fvec(chain->size());
    for (int i = 0; i < chain->size(); ++i) fvec(i) = f(chain->point(i));
    const double estimate =
        post_widder_invert(make_chain_derivative_oracle(sg, fvec, idx), t, order);
    const double reference = exact_semigroup(sg, t, fvec)(idx);
    const double rel_tol = get_number(cfg.raw, "rel_tol", 0.02);
    const double scale = reference != 0.0 ? std::abs(reference) : 1.0;

    ResultRow row;
    row.estimate = estimate;
    row.std_err = 0.0;
    row.n = static_cast<std::size_t>(order);
    row.pass = std::abs(estimate - reference) <= rel_tol * scale;
    row.detail = {{"reference", reference},
                  {"order", order},
                  {"rel_error", std::abs(estimate - reference) / scale},
                  {"rel_tol", rel_tol}};
    return {{row}, {}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    out << content;
}

void write_outputs(const std::string& out_dir, const std::string& command,
                   const nlohmann::json& resolved, std::uint64_t seed,
                   const CommandOutput& result) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    std::ostringstream csv;
    csv << "# config: " << resolved.dump() << '\n';
    csv << "command,estimate,stderr,n,seed,pass\n";
    for (const auto& row : result.rows)
        csv << command << ',' << fmt(row.estimate) << ',' << fmt(row.std_err)
            << ',' << row.n << ',' << seed << ','
            << (row.pass ? "true" : "false") << '\n';
    write_file(dir / "results.csv", csv.str());

    nlohmann::json report;
    report["command"] = command;
    report["config"] = resolved;
    report["all_pass"] = std::all_of(result.rows.begin(), result.rows.end(),
                                     [](const ResultRow& r) { return r.pass; });
    report["rows"] = nlohmann::json::array();
    for (const auto& row : result.rows) {
        nlohmann::json jr = row.detail;
        jr["estimate"] = row.estimate;
        jr["stderr"] = row.std_err;
        jr["n"] = row.n;
        jr["pass"] = row.pass;
        report["rows"].push_back(std::move(jr));
    }
    write_file(dir / "report.json", report.dump(2) + "\n");

    if (result.paths_csv) {
        std::ostringstream paths;
        paths << "# config: " << resolved.dump() << '\n' << *result.paths_csv;
        write_file(dir / "paths.csv", paths.str());
    }
}

}  // namespace

int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides) try {
    nlohmann::json doc = load_json_file(config_path);
    if (!doc.is_object())
        throw ConfigError(config_path + ": top-level JSON object expected");
    if (overrides.seed) doc["seed"] = *overrides.seed;
    if (overrides.samples) doc["samples"] = *overrides.samples;
    if (overrides.alpha) doc["alpha"] = *overrides.alpha;
    if (overrides.time) doc["time"] = *overrides.time;
    if (overrides.max_revivals) doc["max_revivals"] = *overrides.max_revivals;
    if (overrides.horizon) doc["horizon"] = *overrides.horizon;
    if (overrides.tolerance_sigma)
        doc["tolerance_sigma"] = *overrides.tolerance_sigma;
    if (!doc.contains("seed"))
        throw ConfigError("seed is mandatory: set \"seed\" or pass --seed");

#ifdef _OPENMP
    if (overrides.threads) omp_set_num_threads(std::max(1, *overrides.threads));
#endif

    const ExperimentConfig cfg = parse_config(doc);
    const std::uint64_t seed = run_params(doc).seed;

    CommandOutput result;
    if (command == "simulate") result = cmd_simulate(cfg);
    else if (command == "resolvent") result = cmd_resolvent(cfg);
    else if (command == "semigroup") result = cmd_semigroup(cfg);
    else if (command == "check-dynkin") result = cmd_check_dynkin(cfg);
    else if (command == "check-revival") result = cmd_check_revival(cfg);
    else if (command == "check-pasting") result = cmd_check_pasting(cfg);
    else if (command == "check-projection") result = cmd_check_projection(cfg);
    else if (command == "invert-laplace") result = cmd_invert_laplace(cfg);
    else throw ConfigError("unknown command: " + command);

    std::string out_dir = "out";
    if (const char* env = std::getenv("CONCATMC_OUT_DIR")) out_dir = env;
    if (overrides.out_dir) out_dir = *overrides.out_dir;
    write_outputs(out_dir, command, doc, seed, result);

    const bool all_pass =
        std::all_of(result.rows.begin(), result.rows.end(),
                    [](const ResultRow& r) { return r.pass; });
    return all_pass ? 0 : 1;
} catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
}

}  // namespace concatmc
