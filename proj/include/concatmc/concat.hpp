#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "concatmc/process.hpp"
#include "concatmc/transfer.hpp"

namespace concatmc {

// One stage of a concatenation: a process and the kernel transferring its
// dying paths to the next stage.  The last stage of a finite plan omits the
// kernel.
struct Stage {
    ProcessSpec process;
    std::optional<KernelSpec> kernel;
};

// Truncation policy for countable plans: stop after max_revivals revivals
// (the composite then *dies* at the last segment's death -- a legitimate
// finite concatenation), or censor at total time horizon (the composite is
// *unknown* past it).
struct Truncation {
    int max_revivals = 1000;
    double horizon = 1e6;
};

// Ordered stages plus truncation.  stages lists the explicit prefix;
// stage_rule, when set, generates stage n (1-based) on demand for countable
// plans such as the alternating pasting construction.  Plans are immutable
// and shareable across threads; rule-generated stages are returned by value.
struct ConcatenationPlan {
    std::vector<Stage> stages;
    std::function<Stage(int)> stage_rule;
    Truncation truncation;

    bool has_stage(int n) const {
        return n >= 1 &&
               (n <= static_cast<int>(stages.size()) || stage_rule != nullptr);
    }
    Stage stage(int n) const;
};

// Structural validation of the explicit prefix: distinct stage tags, kernel
// targets inside the next stage's space, kernel rows covering every possible
// exit point (killing states for chains, killing endpoints for diffusions),
// no kernel on the final stage of a finite plan.  Rule-generated stages are
// validated when first materialized.  Throws ConfigError.
void validate(const ConcatenationPlan& plan);

// Why sampling stopped extending the composite.
enum class TerminalReason {
    Died,              // a segment died with no kernel/next stage to revive it
    SegmentImmortal,   // a segment has infinite lifetime; nothing follows
    MaxRevivals,       // truncated to the finite concatenation of the stages so far
    Censored,          // ran into the horizon; composite unknown past it
    RevivalUndefined,  // segment died but had no exit point; permanent death
};

struct ConcatSegment {
    int stage_index = 1;  // 1-based; equals position in ConcatPath::segments + 1
    Path path;
    // Set iff the next segment exists: the sampled entry point of stage
    // stage_index + 1, entered at cumulative time zeta^(stage_index).
    std::optional<SpacePoint> revival_point;
};

// A sampled composite trajectory.  segments always spans stage indices
// 1..L contiguously; stages before the start stage hold dead paths (the
// delta_[Delta] factors of the initial measure).  cumulative_lifetimes[i] is
// zeta^(i+1), the compensated partial sum of segment lifetimes, with +inf for
// a censored or immortal final segment.
struct ConcatPath {
    std::vector<ConcatSegment> segments;
    std::vector<double> cumulative_lifetimes;
    bool censored = false;
    double censor_time = kInf;
    TerminalReason terminal = TerminalReason::Died;

    double total_lifetime() const {
        return cumulative_lifetimes.empty() ? 0.0 : cumulative_lifetimes.back();
    }
};

// Sample a composite started at `start` in stage `start_stage`'s space.
// Segment start_stage is sampled from its process; each death is transferred
// by the stage kernel to the next stage, until truncation, a missing
// kernel/stage, an immortal segment, or a death without exit point (which is
// permanent death, recorded, not an error).  A single sequential rng stream
// drives all segments, so increasing max_revivals only appends segments.
ConcatPath sample_concatenated(const ConcatenationPlan& plan, int start_stage,
                               const SpacePoint& start, RngStream& rng);

// Composite state at time t: segment n's path on [zeta^(n-1), zeta^(n)),
// Cemetery from the total lifetime on.  Throws UndefinedRegionError on the
// censored region.
SpacePoint evaluate_concat(const ConcatPath& cp, double t);

// R^n, the n-th revival time: zeta^(n) when the composite is alive at or
// beyond it (segment n has a successor), +inf otherwise.  R^0 = 0.
double revival_time(const ConcatPath& cp, int n);

// The composite killed at R^n: agrees with cp on [0, zeta^(n)), Cemetery
// thereafter -- the finite concatenation of stages <= n.  Identity when cp
// has at most n segments.
ConcatPath kill_at_revival(const ConcatPath& cp, int n);

// The shift Theta_r lifted to composites: segments strictly before the one
// active at r become dead paths, the active segment is shifted locally, the
// suffix is kept, and the partial sums are rebuilt.
ConcatPath shift_concat(const ConcatPath& cp, double r);

}  // namespace concatmc
