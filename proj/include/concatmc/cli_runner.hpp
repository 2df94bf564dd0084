#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace concatmc {

// Command-line overrides; set fields win over the config file's values and
// are folded into the resolved document embedded in every output.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    std::optional<double> alpha;
    std::optional<double> time;
    std::optional<int> max_revivals;
    std::optional<double> horizon;
    std::optional<double> tolerance_sigma;
    std::optional<std::string> out_dir;  // else $CONCATMC_OUT_DIR, else "out"
    std::optional<int> threads;          // caps the OpenMP worker count
};

// Runs one command against a config file, writing results.csv and report.json
// (plus paths.csv for simulate) into the output directory.  Returns the
// process exit code: 0 all checks passed, 1 at least one statistical check
// failed, 2 configuration error (diagnostic on stderr).  Identical resolved
// config + seed produce byte-identical outputs regardless of thread count.
int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides);

}  // namespace concatmc
