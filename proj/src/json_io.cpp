#include "concatmc/json_io.hpp"

#include <fstream>
#include <utility>
#include <vector>

#include "concatmc/errors.hpp"

namespace concatmc {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

// Attach field context to errors thrown while parsing a subobject.
template <typename F>
auto with_context(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

const nlohmann::json& require_member(const nlohmann::json& j,
                                     const std::string& key) {
    if (!j.is_object() || !j.contains(key))
        fail(key, "required field is missing");
    return j.at(key);
}

double require_number(const nlohmann::json& j, const std::string& key) {
    const auto& v = require_member(j, key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
}

double get_number(const nlohmann::json& j, const std::string& key,
                  double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return require_number(j, key);
}

std::int64_t require_integer(const nlohmann::json& j, const std::string& key) {
    const auto& v = require_member(j, key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
}

std::int64_t get_integer(const nlohmann::json& j, const std::string& key,
                         std::int64_t fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return require_integer(j, key);
}

std::string require_string(const nlohmann::json& j, const std::string& key) {
    const auto& v = require_member(j, key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const nlohmann::json& j, const std::string& key, bool fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) fail(key, "expected a boolean");
    return v.get<bool>();
}

SpacePoint parse_point(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("point: expected an object");
    if (get_bool(j, "cemetery", false)) return SpacePoint::cemetery();
    if (j.contains("label") && j.contains("coord"))
        throw ConfigError("point: \"label\" and \"coord\" are exclusive");
    const int tag = static_cast<int>(get_integer(j, "tag", 0));
    if (j.contains("label"))
        return SpacePoint::label_point(tag, require_string(j, "label"));
    if (j.contains("coord"))
        return SpacePoint::real_point(tag, require_number(j, "coord"));
    throw ConfigError("point: needs \"label\", \"coord\", or \"cemetery\"");
}

nlohmann::json point_to_json(const SpacePoint& p) {
    if (p.is_cemetery()) return {{"cemetery", true}};
    if (p.kind == SpacePoint::Kind::Label)
        return {{"tag", p.tag}, {"label", p.label}};
    return {{"tag", p.tag}, {"coord", p.coord}};
}

BoundedFn parse_function(const nlohmann::json& j) {
    const std::string kind = require_string(j, "kind");
    if (kind == "const") return BoundedFn::constant(require_number(j, "value"));
    if (kind == "indicator")
        return BoundedFn::indicator(parse_point(require_member(j, "target")));
    if (kind == "table") {
        const auto& values = require_member(j, "values");
        if (!values.is_array()) fail("values", "expected an array of pairs");
        std::vector<std::pair<std::string, double>> table;
        for (const auto& entry : values) {
            if (!entry.is_array() || entry.size() != 2 ||
                !entry[0].is_string() || !entry[1].is_number())
                fail("values", "each entry must be [label, value]");
            table.emplace_back(entry[0].get<std::string>(),
                               entry[1].get<double>());
        }
        return BoundedFn::label_table(std::move(table),
                                      get_bool(j, "match_any_tag", false),
                                      static_cast<int>(get_integer(j, "tag", 0)));
    }
    throw ConfigError("function kind must be const, indicator, or table: " +
                      kind);
}

GFunctional parse_g_functional(const nlohmann::json& j) {
    GFunctional g;
    if (!j.is_object()) throw ConfigError("g: expected an object");
    if (j.contains("times")) {
        for (const auto& t : j.at("times")) {
            if (!t.is_number()) fail("times", "expected numbers");
            g.times.push_back(t.get<double>());
        }
        for (const auto& f : require_member(j, "funcs"))
            g.funcs.push_back(parse_function(f));
    }
    if (g.times.size() != g.funcs.size())
        throw ConfigError("g: times and funcs must have equal length");
    return g;
}

ProcessSpec parse_process(const nlohmann::json& j) {
    const std::string kind = require_string(j, "kind");
    const int tag = static_cast<int>(get_integer(j, "tag", 1));
    if (kind == "chain") {
        const auto& states = require_member(j, "states");
        if (!states.is_array() || states.empty())
            fail("states", "expected a nonempty array of labels");
        FiniteChainSpec c;
        std::vector<std::string> labels;
        for (const auto& s : states) {
            if (!s.is_string()) fail("states", "expected strings");
            labels.push_back(s.get<std::string>());
        }
        c.space = TaggedSpace{tag, StateSpaceDesc{FiniteLabels{labels}}};
        const int n = c.size();
        c.rates.assign(n, std::vector<double>(n, 0.0));
        c.kill.assign(n, 0.0);
        const auto index = [&](const std::string& label) {
            const int i = c.index_of(label);
            if (i < 0) fail("rates/kill", "unknown state label " + label);
            return i;
        };
        if (j.contains("rates")) {
            const auto& rates = j.at("rates");
            if (!rates.is_object()) fail("rates", "expected an object");
            for (const auto& [src, row] : rates.items()) {
                if (!row.is_object()) fail("rates", "row must be an object");
                for (const auto& [dst, rate] : row.items()) {
                    if (!rate.is_number()) fail("rates", "expected numbers");
                    c.rates[index(src)][index(dst)] = rate.get<double>();
                }
            }
        }
        if (j.contains("kill")) {
            const auto& kill = j.at("kill");
            if (!kill.is_object()) fail("kill", "expected an object");
            for (const auto& [lbl, rate] : kill.items()) {
                if (!rate.is_number()) fail("kill", "expected numbers");
                c.kill[index(lbl)] = rate.get<double>();
            }
        }
        ProcessSpec spec = c;
        validate(spec);
        return spec;
    }
    if (kind == "diffusion") {
        const auto& iv = require_member(j, "interval");
        RealInterval interval{require_number(iv, "lo"), require_number(iv, "hi"),
                              get_bool(iv, "closed_lo", true),
                              get_bool(iv, "closed_hi", true)};
        IntervalDiffusionSpec d;
        d.space = TaggedSpace{tag, StateSpaceDesc{interval}};
        d.drift = j.is_object() && j.contains("drift")
                      ? require_string(j, "drift")
                      : "zero";
        d.sigma = j.is_object() && j.contains("sigma")
                      ? require_string(j, "sigma")
                      : "unit";
        d.kill_lo = get_bool(j, "kill_lo", true);
        d.kill_hi = get_bool(j, "kill_hi", true);
        d.dt = get_number(j, "dt", 1e-3);
        ProcessSpec spec = d;
        validate(spec);
        return spec;
    }
    throw ConfigError("process kind must be chain or diffusion: " + kind);
}

KernelSpec parse_kernel(const nlohmann::json& j) {
    const std::string kind = require_string(j, "kind");
    if (kind == "exit_table") {
        const auto& rows = require_member(j, "rows");
        if (!rows.is_array()) fail("rows", "expected an array");
        std::vector<std::pair<SpacePoint, KernelRow>> table;
        for (const auto& entry : rows) {
            const SpacePoint source = parse_point(require_member(entry, "source"));
            KernelRow row;
            const auto& targets = require_member(entry, "row");
            if (!targets.is_array()) fail("row", "expected an array");
            for (const auto& t : targets)
                row.emplace_back(parse_point(require_member(t, "target")),
                                 require_number(t, "weight"));
            table.emplace_back(source, std::move(row));
        }
        return make_exit_table(std::move(table));
    }
    if (kind == "dirac")
        return KernelSpec{DiracKernel{parse_point(require_member(j, "target"))}};
    if (kind == "exit_identity")
        return KernelSpec{ExitIdentityKernel{
            static_cast<int>(require_integer(j, "retag"))}};
    throw ConfigError(
        "kernel kind must be exit_table, dirac, or exit_identity: " + kind);
}

Truncation parse_truncation(const nlohmann::json& doc) {
    Truncation t;
    t.max_revivals =
        static_cast<int>(get_integer(doc, "max_revivals", t.max_revivals));
    t.horizon = get_number(doc, "horizon", t.horizon);
    return t;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig cfg;
    cfg.raw = doc;
    if (doc.contains("processes")) {
        const auto& procs = doc.at("processes");
        if (!procs.is_object()) fail("processes", "expected an object");
        for (const auto& [name, p] : procs.items())
            cfg.processes.emplace(name, with_context("processes." + name, [&] {
                                      return parse_process(p);
                                  }));
    }
    if (doc.contains("kernels")) {
        const auto& kernels = doc.at("kernels");
        if (!kernels.is_object()) fail("kernels", "expected an object");
        for (const auto& [name, k] : kernels.items())
            cfg.kernels.emplace(name, with_context("kernels." + name, [&] {
                                    return parse_kernel(k);
                                }));
    }

    const auto named_process = [&](const std::string& name) -> const ProcessSpec& {
        const auto it = cfg.processes.find(name);
        if (it == cfg.processes.end())
            throw ConfigError("unknown process reference: " + name);
        return it->second;
    };
    const auto named_kernel = [&](const std::string& name) -> const KernelSpec& {
        const auto it = cfg.kernels.find(name);
        if (it == cfg.kernels.end())
            throw ConfigError("unknown kernel reference: " + name);
        return it->second;
    };

    if (doc.contains("plan")) {
        const auto& pj = doc.at("plan");
        const auto& stages = require_member(pj, "stages");
        if (!stages.is_array() || stages.empty())
            fail("plan.stages", "expected a nonempty array");
        ConcatenationPlan plan;
        for (const auto& sj : stages) {
            Stage s;
            s.process = named_process(require_string(sj, "process"));
            if (sj.contains("kernel"))
                s.kernel = named_kernel(require_string(sj, "kernel"));
            plan.stages.push_back(std::move(s));
        }
        plan.truncation = parse_truncation(doc);
        with_context("plan", [&] { validate(plan); });
        cfg.plan = std::move(plan);
    }
    if (doc.contains("pasting")) {
        const auto& pj = doc.at("pasting");
        PastingSpec ps{named_process(require_string(pj, "minus")),
                       named_process(require_string(pj, "plus")),
                       named_kernel(require_string(pj, "kernel_minus")),
                       named_kernel(require_string(pj, "kernel_plus"))};
        with_context("pasting", [&] { validate(ps); });
        cfg.pasting = std::move(ps);
    }
    if (doc.contains("process")) {
        const std::string name = require_string(doc, "process");
        (void)named_process(name);
        cfg.process = name;
    }
    return cfg;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace concatmc
