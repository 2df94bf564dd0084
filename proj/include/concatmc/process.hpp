#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "concatmc/path.hpp"
#include "concatmc/rng.hpp"
#include "concatmc/state_space.hpp"

namespace concatmc {

// Finite-state chain with killing.  rates is the jump-rate matrix Q with a
// zero diagonal (holding rates are implied by row sums); kill is the
// per-state killing rate c(x).  The subgenerator used by the oracle is
// Q - diag(rowsum Q) - diag(c).
struct FiniteChainSpec {
    TaggedSpace space;  // FiniteLabels base
    std::vector<std::vector<double>> rates;
    std::vector<double> kill;

    int size() const { return static_cast<int>(space.base.labels().labels.size()); }
    int index_of(const std::string& label) const;
    SpacePoint point(int i) const;
};

// Euler-Maruyama diffusion on an interval, killed at the flagged endpoints.
// Death is detected at grid times only: the first grid step landing outside
// the open interval through a killing endpoint kills the path, with the exit
// point snapped to that endpoint (O(sqrt(dt)) bias, documented).  A step
// through a non-killing endpoint is reflected back inside.
struct IntervalDiffusionSpec {
    TaggedSpace space;  // RealInterval base
    std::string drift = "zero";
    std::string sigma = "unit";
    bool kill_lo = true;
    bool kill_hi = true;
    double dt = 1e-3;
};

using ProcessSpec = std::variant<FiniteChainSpec, IntervalDiffusionSpec>;

const TaggedSpace& space_of(const ProcessSpec& spec);

// Throws ConfigError on structural problems: non-square rates, negative or
// non-finite entries, nonzero diagonal, bad dt, unknown drift/sigma key.
void validate(const ProcessSpec& spec);

// Named scalar functions admitted in diffusion configs: "zero", "unit",
// "const(c)", "ou(theta,mu)" (the drift theta*(mu - x)).  No arbitrary code.
std::function<double(double)> parse_scalar_fn(const std::string& key);

// Sample one trajectory started at `start` (its own state for regular points,
// the dead path for Cemetery).
//
// Chains use exact Gillespie sampling: the holding time in state i is
// exponential with rate (total jump rate + kill rate); a single uniform then
// decides the competition, with the kill interval first and jump targets in
// label order (pinned so seeds reproduce across refactors).  Killing records
// the exact death time; a zero-total-rate state yields lifetime = inf with no
// censoring (the constant trajectory is fully known).  If the next event
// would land at or past the horizon the path is censored there instead.
//
// Diffusions step on the dt grid up to the horizon and are censored past it.
Path sample_path(const ProcessSpec& spec, const SpacePoint& start,
                 double horizon, RngStream& rng);

}  // namespace concatmc
