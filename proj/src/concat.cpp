#include "concatmc/concat.hpp"

#include <algorithm>
#include <cmath>

#include "concatmc/errors.hpp"
#include "concatmc/numeric.hpp"

namespace concatmc {

namespace {

// Exit points a stage process can produce: killing states for chains,
// killing endpoints for diffusions.
std::vector<SpacePoint> possible_exit_points(const ProcessSpec& spec) {
    std::vector<SpacePoint> out;
    if (const auto* c = std::get_if<FiniteChainSpec>(&spec)) {
        for (int i = 0; i < c->size(); ++i) {
            if (c->kill[static_cast<std::size_t>(i)] > 0.0) out.push_back(c->point(i));
        }
    } else {
        const auto& d = std::get<IntervalDiffusionSpec>(spec);
        const auto& iv = d.space.base.interval();
        if (d.kill_lo) out.push_back(SpacePoint::real_point(d.space.tag, iv.lo));
        if (d.kill_hi) out.push_back(SpacePoint::real_point(d.space.tag, iv.hi));
    }
    return out;
}

void validate_stage_link(const Stage& from, const TaggedSpace& next_space,
                         int index) {
    const auto& kernel = *from.kernel;
    const std::string where = "plan stage " + std::to_string(index) + ": ";
    const auto check_target = [&](const SpacePoint& target) {
        if (!contains(next_space, target))
            throw ConfigError(where + "kernel target " + to_string(target) +
                              " outside next stage's space");
    };
    if (const auto* table = std::get_if<ExitPointTable>(&kernel.kernel)) {
        for (const auto& [source, row] : table->rows) {
            (void)source;
            for (const auto& [target, w] : row) {
                (void)w;
                check_target(target);
            }
        }
        // Every reachable exit point needs a row.
        for (const auto& exit : possible_exit_points(from.process)) {
            bool found = false;
            for (const auto& [source, row] : table->rows) {
                (void)row;
                if (source == exit) {
                    found = true;
                    break;
                }
            }
            if (!found)
                throw ConfigError(where + "kernel table lacks a row for exit " +
                                  to_string(exit));
        }
    } else if (const auto* dirac = std::get_if<DiracKernel>(&kernel.kernel)) {
        check_target(dirac->target);
    } else {
        const auto& ident = std::get<ExitIdentityKernel>(kernel.kernel);
        if (ident.retarget_tag != next_space.tag)
            throw ConfigError(where + "identity kernel retargets tag " +
                              std::to_string(ident.retarget_tag) +
                              " but next stage has tag " +
                              std::to_string(next_space.tag));
        for (const auto& exit : possible_exit_points(from.process))
            check_target(retag(exit, ident.retarget_tag));
    }
}

void validate_stage(const Stage& s) {
    validate(s.process);
    if (s.kernel) validate(*s.kernel);
}

}  // namespace

Stage ConcatenationPlan::stage(int n) const {
    if (n >= 1 && n <= static_cast<int>(stages.size()))
        return stages[static_cast<std::size_t>(n - 1)];
    if (n >= 1 && stage_rule) {
        Stage s = stage_rule(n);
        validate_stage(s);  // rule-generated stages are checked on materialization
        return s;
    }
    throw ConfigError("plan has no stage " + std::to_string(n));
}

void validate(const ConcatenationPlan& plan) {
    if (plan.stages.empty() && !plan.stage_rule)
        throw ConfigError("plan: no stages and no stage rule");
    if (plan.truncation.max_revivals < 0)
        throw ConfigError("plan: max_revivals must be >= 0");
    if (!(plan.truncation.horizon > 0.0))
        throw ConfigError("plan: horizon must be > 0");
    std::vector<int> tags;
    for (const auto& s : plan.stages) {
        validate_stage(s);
        tags.push_back(space_of(s.process).tag);
    }
    std::sort(tags.begin(), tags.end());
    if (std::adjacent_find(tags.begin(), tags.end()) != tags.end())
        throw ConfigError("plan: stage tags must be pairwise distinct");
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        const auto& s = plan.stages[i];
        if (!s.kernel) continue;
        const bool has_next = i + 1 < plan.stages.size() || plan.stage_rule;
        if (!has_next)
            throw ConfigError("plan: final stage carries a kernel but no stage follows");
        if (i + 1 < plan.stages.size()) {
            validate_stage_link(s, space_of(plan.stages[i + 1].process),
                                static_cast<int>(i + 1));
        }
    }
}

ConcatPath sample_concatenated(const ConcatenationPlan& plan, int start_stage,
                               const SpacePoint& start, RngStream& rng) {
    if (!plan.has_stage(start_stage))
        throw ConfigError("sample_concatenated: no stage " +
                          std::to_string(start_stage));
    ConcatPath cp;
    // Dead prefix: the delta_[Delta] factors for stages below the start.
    for (int j = 1; j < start_stage; ++j) {
        cp.segments.push_back({j, Path::dead(), std::nullopt});
        cp.cumulative_lifetimes.push_back(0.0);
    }
    if (start.is_cemetery()) {
        cp.segments.push_back({start_stage, Path::dead(), std::nullopt});
        cp.cumulative_lifetimes.push_back(0.0);
        return cp;
    }

    Stage st = plan.stage(start_stage);
    if (!contains(space_of(st.process), start))
        throw DomainError("sample_concatenated: start " + to_string(start) +
                          " outside stage " + std::to_string(start_stage) +
                          "'s space");

    NeumaierSum elapsed;
    SpacePoint current = start;
    int stage_index = start_stage;
    int revivals = 0;
    for (;;) {
        const double remaining = plan.truncation.horizon - elapsed.value();
        if (!(remaining > 0.0)) {
            // Rounding guard: a death landed numerically at the horizon, so
            // the pending revival is beyond the observation window.
            cp.censored = true;
            cp.censor_time = plan.truncation.horizon;
            cp.terminal = TerminalReason::Censored;
            if (!cp.segments.empty()) cp.segments.back().revival_point.reset();
            return cp;
        }
        Path seg_path = sample_path(st.process, current, remaining, rng);
        ConcatSegment seg{stage_index, std::move(seg_path), std::nullopt};

        if (seg.path.censored) {
            cp.segments.push_back(std::move(seg));
            cp.cumulative_lifetimes.push_back(kInf);
            cp.censored = true;
            cp.censor_time = plan.truncation.horizon;
            cp.terminal = TerminalReason::Censored;
            return cp;
        }
        if (std::isinf(seg.path.lifetime)) {
            cp.segments.push_back(std::move(seg));
            cp.cumulative_lifetimes.push_back(kInf);
            cp.terminal = TerminalReason::SegmentImmortal;
            return cp;
        }

        elapsed.add(seg.path.lifetime);
        const double zeta_n = elapsed.value();

        const bool next_exists = st.kernel && plan.has_stage(stage_index + 1);
        if (!next_exists) {
            cp.segments.push_back(std::move(seg));
            cp.cumulative_lifetimes.push_back(zeta_n);
            cp.terminal = TerminalReason::Died;
            return cp;
        }
        if (revivals >= plan.truncation.max_revivals) {
            cp.segments.push_back(std::move(seg));
            cp.cumulative_lifetimes.push_back(zeta_n);
            cp.terminal = TerminalReason::MaxRevivals;
            return cp;
        }
        if (!exit_point(seg.path)) {
            // Death without a pre-death state: the revival measure is
            // undefined and the composite dies for good.
            cp.segments.push_back(std::move(seg));
            cp.cumulative_lifetimes.push_back(zeta_n);
            cp.terminal = TerminalReason::RevivalUndefined;
            return cp;
        }

        const SpacePoint revival = sample_revival(*st.kernel, seg.path, rng);
        seg.revival_point = revival;
        cp.segments.push_back(std::move(seg));
        cp.cumulative_lifetimes.push_back(zeta_n);

        stage_index += 1;
        revivals += 1;
        st = plan.stage(stage_index);
        if (!contains(space_of(st.process), revival))
            throw ConfigError("sample_concatenated: revival point " +
                              to_string(revival) + " outside stage " +
                              std::to_string(stage_index) + "'s space");
        current = revival;
    }
}

SpacePoint evaluate_concat(const ConcatPath& cp, double t) {
    if (t < 0.0) throw DomainError("evaluate_concat: negative time");
    if (cp.censored && t >= cp.censor_time)
        throw UndefinedRegionError("evaluate_concat: censored region");
    if (t >= cp.total_lifetime()) return SpacePoint::cemetery();
    // First segment whose right endpoint exceeds t; zero-length prefixes are
    // skipped, which realizes right continuity at revival instants.
    const auto& cum = cp.cumulative_lifetimes;
    const auto it = std::upper_bound(cum.begin(), cum.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - cum.begin());
    const double before = k == 0 ? 0.0 : cum[k - 1];
    const SpacePoint s = evaluate(cp.segments[k].path, t - before);
    if (!s.is_cemetery()) return s;
    // One-ulp guard: compensated partial sums can disagree with the plain
    // subtraction at a segment boundary; the segment is active here, so hold
    // its last recorded state.
    const auto& ev = cp.segments[k].path.events;
    return ev.empty() ? SpacePoint::cemetery() : ev.back().state;
}

double revival_time(const ConcatPath& cp, int n) {
    if (n < 0) throw DomainError("revival_time: n must be >= 0");
    if (n == 0) return 0.0;
    // R^n is realized iff segment n has a successor.
    if (n < static_cast<int>(cp.segments.size()))
        return cp.cumulative_lifetimes[static_cast<std::size_t>(n - 1)];
    return kInf;
}

ConcatPath kill_at_revival(const ConcatPath& cp, int n) {
    if (n < 1) throw DomainError("kill_at_revival: n must be >= 1");
    if (n >= static_cast<int>(cp.segments.size())) return cp;
    ConcatPath out;
    out.segments.assign(cp.segments.begin(), cp.segments.begin() + n);
    out.segments.back().revival_point.reset();  // the revival no longer occurs
    out.cumulative_lifetimes.assign(cp.cumulative_lifetimes.begin(),
                                    cp.cumulative_lifetimes.begin() + n);
    out.terminal = TerminalReason::Died;
    return out;
}

ConcatPath shift_concat(const ConcatPath& cp, double r) {
    if (r < 0.0) throw DomainError("shift_concat: negative r");
    if (r == 0.0) return cp;
    ConcatPath out;
    out.terminal = cp.terminal;

    if (cp.censored && r >= cp.censor_time) {
        // Entire shifted composite lies in the unknown region.
        out.censored = true;
        out.censor_time = 0.0;
        for (const auto& seg : cp.segments) {
            Path unknown;
            unknown.censored = true;
            unknown.censor_time = 0.0;
            unknown.lifetime = kInf;
            out.segments.push_back({seg.stage_index, std::move(unknown), std::nullopt});
            out.cumulative_lifetimes.push_back(kInf);
        }
        return out;
    }
    if (!cp.censored && r >= cp.total_lifetime()) {
        // ([Delta^1], [Delta^2], ...): everything already over.
        for (const auto& seg : cp.segments) {
            out.segments.push_back({seg.stage_index, Path::dead(), std::nullopt});
            out.cumulative_lifetimes.push_back(0.0);
        }
        return out;
    }

    const auto& cum = cp.cumulative_lifetimes;
    const auto it = std::upper_bound(cum.begin(), cum.end(), r);
    const std::size_t k = static_cast<std::size_t>(it - cum.begin());
    const double before = k == 0 ? 0.0 : cum[k - 1];

    NeumaierSum elapsed;
    for (std::size_t i = 0; i < cp.segments.size(); ++i) {
        const auto& seg = cp.segments[i];
        if (i < k) {
            out.segments.push_back({seg.stage_index, Path::dead(), std::nullopt});
            out.cumulative_lifetimes.push_back(0.0);
        } else {
            ConcatSegment ns{seg.stage_index,
                             i == k ? shift(seg.path, r - before) : seg.path,
                             seg.revival_point};
            if (std::isinf(ns.path.lifetime)) {
                out.segments.push_back(std::move(ns));
                out.cumulative_lifetimes.push_back(kInf);
            } else {
                elapsed.add(ns.path.lifetime);
                out.segments.push_back(std::move(ns));
                out.cumulative_lifetimes.push_back(elapsed.value());
            }
        }
    }
    if (cp.censored) {
        out.censored = true;
        out.censor_time = cp.censor_time - r;
    }
    return out;
}

}  // namespace concatmc
