#pragma once

#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "concatmc/concat.hpp"
#include "concatmc/functions.hpp"
#include "concatmc/pasting.hpp"
#include "concatmc/process.hpp"
#include "concatmc/transfer.hpp"

namespace concatmc {

// A parsed experiment configuration.  `raw` is the resolved document (after
// command-line overrides) and is embedded verbatim in every output file.
// Exactly the sections present in the document are populated; each command
// checks for the ones it needs.
struct ExperimentConfig {
    nlohmann::json raw;
    std::map<std::string, ProcessSpec> processes;
    std::map<std::string, KernelSpec> kernels;
    std::optional<ConcatenationPlan> plan;
    std::optional<PastingSpec> pasting;
    std::optional<std::string> process;  // name of the single-process target
};

// --- Leaf parsers ----------------------------------------------------------
//
// Points:     {"tag": 1, "label": "a"} | {"tag": 1, "coord": 0.5}
//             | {"cemetery": true}                     (tag defaults to 0)
// Functions:  {"kind": "const", "value": c}
//             | {"kind": "indicator", "target": <point>}
//             | {"kind": "table", "values": [["a", 1.0], ...],
//                "match_any_tag": false, "tag": 0}
// Processes:  {"kind": "chain", "tag": 1, "states": [...],
//              "rates": {"a": {"b": 1.0}}, "kill": {"a": 0.3}}
//             | {"kind": "diffusion", "tag": 1, "interval": {"lo": 0,
//                "hi": 1, "closed_lo": true, "closed_hi": true},
//                "drift": "zero", "sigma": "unit",
//                "kill_lo": true, "kill_hi": true, "dt": 1e-3}
// Kernels:    {"kind": "exit_table", "rows": [{"source": <point>, "row":
//              [{"target": <point>, "weight": w}, ...]}, ...]}
//             | {"kind": "dirac", "target": <point>}
//             | {"kind": "exit_identity", "retag": 2}
//
// All parsers throw ConfigError naming the offending field.

SpacePoint parse_point(const nlohmann::json& j);
nlohmann::json point_to_json(const SpacePoint& p);

BoundedFn parse_function(const nlohmann::json& j);
GFunctional parse_g_functional(const nlohmann::json& j);
ProcessSpec parse_process(const nlohmann::json& j);
KernelSpec parse_kernel(const nlohmann::json& j);

// Truncation from the document's top-level max_revivals / horizon keys
// (falling back to the Truncation defaults).
Truncation parse_truncation(const nlohmann::json& doc);

// Builds the process/kernel maps and whichever of plan / pasting / process
// the document declares, resolving and validating all name references.
ExperimentConfig parse_config(const nlohmann::json& doc);

// Reads and parses a config file; I/O and JSON syntax errors surface as
// ConfigError with the parser's position diagnostic.
nlohmann::json load_json_file(const std::string& path);

// --- Checked field access ----------------------------------------------------

const nlohmann::json& require_member(const nlohmann::json& j,
                                     const std::string& key);
double require_number(const nlohmann::json& j, const std::string& key);
double get_number(const nlohmann::json& j, const std::string& key,
                  double fallback);
std::int64_t require_integer(const nlohmann::json& j, const std::string& key);
std::int64_t get_integer(const nlohmann::json& j, const std::string& key,
                         std::int64_t fallback);
std::string require_string(const nlohmann::json& j, const std::string& key);
bool get_bool(const nlohmann::json& j, const std::string& key, bool fallback);

}  // namespace concatmc
