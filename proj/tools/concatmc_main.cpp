#include <cstdint>
#include <string>

#include "CLI11.hpp"

#include "concatmc/cli_runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "concatmc: simulation and verification of concatenated and pasted "
        "killed Markov processes"};

    std::string command;
    std::string config_path;
    app.add_option("command", command, "one of: simulate, resolvent, semigroup, "
                                       "check-dynkin, check-revival, "
                                       "check-pasting, check-projection, "
                                       "invert-laplace")
        ->required();
    app.add_option("config", config_path, "JSON experiment configuration")
        ->required()
        ->check(CLI::ExistingFile);

    concatmc::CliOverrides ov;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    double alpha = 0.0, time = 0.0, horizon = 0.0, sigma = 0.0;
    int max_revivals = 0, threads = 0;
    std::string out_dir;
    auto* o_seed = app.add_option("--seed", seed, "RNG seed (mandatory here or in the config)");
    auto* o_samples = app.add_option("--samples", samples, "Monte Carlo replications");
    auto* o_alpha = app.add_option("--alpha", alpha, "resolvent parameter alpha > 0");
    auto* o_time = app.add_option("--time", time, "semigroup / inversion time t");
    auto* o_max = app.add_option("--max-revivals", max_revivals,
                                 "truncate concatenations after this many revivals");
    auto* o_horizon = app.add_option("--horizon", horizon, "censoring horizon");
    auto* o_sigma = app.add_option("--tolerance-sigma", sigma,
                                   "statistical tolerance in pooled standard errors "
                                   "(default 3)");
    auto* o_out = app.add_option("--out-dir", out_dir,
                                 "output directory (default $CONCATMC_OUT_DIR or ./out)");
    auto* o_threads = app.add_option("--threads", threads, "OpenMP worker cap")
                          ->check(CLI::Range(1, 1024));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; genuine argument errors are config errors.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (o_seed->count()) ov.seed = seed;
    if (o_samples->count()) ov.samples = samples;
    if (o_alpha->count()) ov.alpha = alpha;
    if (o_time->count()) ov.time = time;
    if (o_max->count()) ov.max_revivals = max_revivals;
    if (o_horizon->count()) ov.horizon = horizon;
    if (o_sigma->count()) ov.tolerance_sigma = sigma;
    if (o_out->count()) ov.out_dir = out_dir;
    if (o_threads->count()) ov.threads = threads;

    return concatmc::run_command(command, config_path, ov);
}
