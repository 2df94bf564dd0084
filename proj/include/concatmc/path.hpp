#pragma once

#include <optional>
#include <vector>

#include "concatmc/numeric.hpp"
#include "concatmc/state_space.hpp"

namespace concatmc {

struct PathEvent {
    double time = 0.0;
    SpacePoint state;
};

// One sampled trajectory of a killed process.
//
// events holds (time, state) with strictly increasing times starting at 0,
// every time < lifetime, every state regular.  The trajectory is the
// right-continuous step function through the events, and Cemetery from the
// lifetime on.  The dead path has no events and lifetime 0.
//
// lifetime = +inf covers two cases told apart by `censored`:
//   - censored = false: the path genuinely lives forever (e.g. a chain state
//     with zero total rate); the trajectory is known for all t.
//   - censored = true: sampling stopped at the horizon without observing
//     death; the trajectory is unknown from censor_time on, and evaluating
//     there is an error, not a cemetery value.
struct Path {
    enum class Representation { PiecewiseConstant, Grid };

    Representation representation = Representation::PiecewiseConstant;
    double dt = 0.0;  // grid spacing, Grid representation only
    std::vector<PathEvent> events;
    double lifetime = 0.0;
    bool censored = false;
    double censor_time = kInf;
    // Diffusions killed at a boundary record the snapped boundary point here;
    // piecewise-constant paths leave it empty (exit = last held state).
    std::optional<SpacePoint> recorded_exit;

    static Path dead() { return Path{}; }
    bool is_dead() const { return events.empty() && lifetime == 0.0; }
};

// State at time t: last event state for t < lifetime, Cemetery for
// t >= lifetime.  Throws UndefinedRegionError on the censored region
// (censored and t >= censor_time) and DomainError for t < 0.
SpacePoint evaluate(const Path& p, double t);

// The shift Theta_r at path level: q(t) = p(r + t), with
// lifetime(q) = max(lifetime(p) - r, 0) computed exactly in that form.
// Shifting at or past the lifetime yields the dead path.
Path shift(const Path& p, double r);

// The state just before death: the recorded boundary point for diffusions,
// otherwise the last event state.  Empty for the dead path, an infinite
// lifetime, or a censored path (death was not observed).
std::optional<SpacePoint> exit_point(const Path& p);

// Check the representation invariants; throws DomainError on violation.
// Used by tests and sampler postcondition checks.
void validate(const Path& p);

}  // namespace concatmc
