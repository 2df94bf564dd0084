#include "concatmc/pasting.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "concatmc/errors.hpp"
#include "concatmc/numeric.hpp"
#include "concatmc/oracle.hpp"

namespace concatmc {

namespace {

bool interval_contains(const RealInterval& iv, double x) {
    if (x > iv.lo && x < iv.hi) return true;
    if (x == iv.lo) return iv.closed_lo;
    if (x == iv.hi) return iv.closed_hi;
    return false;
}

std::vector<std::string> sorted_labels(const ProcessSpec& s) {
    std::vector<std::string> l = space_of(s).base.labels().labels;
    std::sort(l.begin(), l.end());
    return l;
}

// Intersection of two intervals; a touching pair leaves a bare glue point.
void intersect_intervals(const RealInterval& a, const RealInterval& b,
                         RegionDesc& out) {
    double lo;
    bool closed_lo;
    if (a.lo > b.lo) {
        lo = a.lo;
        closed_lo = a.closed_lo;
    } else if (b.lo > a.lo) {
        lo = b.lo;
        closed_lo = b.closed_lo;
    } else {
        lo = a.lo;
        closed_lo = a.closed_lo && b.closed_lo;
    }
    double hi;
    bool closed_hi;
    if (a.hi < b.hi) {
        hi = a.hi;
        closed_hi = a.closed_hi;
    } else if (b.hi < a.hi) {
        hi = b.hi;
        closed_hi = b.closed_hi;
    } else {
        hi = a.hi;
        closed_hi = a.closed_hi && b.closed_hi;
    }
    if (lo < hi)
        out.intervals.push_back({lo, hi, closed_lo, closed_hi});
    else if (lo == hi && closed_lo && closed_hi)
        out.point_coords.push_back(lo);
}

// a \ b: up to two interval pieces plus bare endpoints of b that lie in a
// but not in b (an open b leaves its closed ends behind).
void subtract_intervals(const RealInterval& a, const RealInterval& b,
                        RegionDesc& out) {
    RegionDesc overlap;
    intersect_intervals(a, b, overlap);
    if (overlap.empty()) {
        out.intervals.push_back(a);
        return;
    }
    // Left remainder: everything of a strictly below b.lo, plus b.lo itself
    // when a holds it and b does not.
    const bool lo_in = interval_contains(a, b.lo) && !b.closed_lo;
    if (a.lo < b.lo)
        out.intervals.push_back({a.lo, b.lo, a.closed_lo, lo_in});
    else if (a.lo == b.lo && a.closed_lo && lo_in)
        out.point_coords.push_back(a.lo);
    // Right remainder, mirrored around b.hi.
    const bool hi_in = interval_contains(a, b.hi) && !b.closed_hi;
    if (b.hi < a.hi)
        out.intervals.push_back({b.hi, a.hi, hi_in, a.closed_hi});
    else if (b.hi == a.hi && a.closed_hi && hi_in)
        out.point_coords.push_back(a.hi);
}

void require_same_kind(const PastingSpec& ps) {
    if (space_of(ps.minus).base.is_finite() !=
        space_of(ps.plus).base.is_finite())
        throw ConfigError("pasting: the two base spaces must be of one kind");
}

void finish_region(RegionDesc& r) {
    std::sort(r.labels.begin(), r.labels.end());
    std::sort(r.point_coords.begin(), r.point_coords.end());
    r.point_coords.erase(
        std::unique(r.point_coords.begin(), r.point_coords.end()),
        r.point_coords.end());
}

void validate_basic(const PastingSpec& ps) {
    validate(ps.minus);
    validate(ps.plus);
    require_same_kind(ps);
    if (shared_region(ps).empty())
        throw ConfigError("pasting: the two base spaces do not overlap");
    validate(ps.kernel_minus);
    validate(ps.kernel_plus);
}

ProcessSpec retag_process(ProcessSpec s, int tag) {
    std::visit([tag](auto& spec) { spec.space.tag = tag; }, s);
    return s;
}

// Re-key a side kernel for stage use: sources must match tag-n exits,
// targets must land in the tag-(n+1) copy.
KernelSpec rekey_kernel(const KernelSpec& k, int source_tag, int target_tag) {
    KernelSpec out = retarget_kernel(k, target_tag);
    if (auto* table = std::get_if<ExitPointTable>(&out.kernel)) {
        std::vector<std::pair<SpacePoint, KernelRow>> rows =
            std::move(table->rows);
        for (auto& [source, row] : rows) source = retag(source, source_tag);
        out = make_exit_table(std::move(rows));
    }
    return out;
}

Stage alternating_stage(const PastingSpec& ps, int n) {
    if (n < 1) throw ConfigError("alternating plan: stage index must be >= 1");
    const bool odd = (n % 2) == 1;
    Stage s;
    s.process = retag_process(odd ? ps.minus : ps.plus, n);
    s.kernel = rekey_kernel(odd ? ps.kernel_minus : ps.kernel_plus, n, n + 1);
    return s;
}

// Evaluate a base test function at the untagged image of any point.
BoundedFn untagged(const BoundedFn& f) {
    return BoundedFn([f](const SpacePoint& p) { return f(retag(p, 0)); },
                     f.bound(), f.name());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
    return seed ^ (0x9e3779b97f4a7c15ULL * (k + 1));
}

}  // namespace

bool RegionDesc::contains(const SpacePoint& p) const {
    if (p.kind == SpacePoint::Kind::Label)
        return std::binary_search(labels.begin(), labels.end(), p.label);
    if (p.kind == SpacePoint::Kind::Real) {
        if (std::binary_search(point_coords.begin(), point_coords.end(),
                               p.coord))
            return true;
        for (const auto& iv : intervals)
            if (interval_contains(iv, p.coord)) return true;
    }
    return false;
}

bool RegionDesc::empty() const {
    return labels.empty() && intervals.empty() && point_coords.empty();
}

RegionDesc shared_region(const PastingSpec& ps) {
    require_same_kind(ps);
    RegionDesc r;
    r.name = "shared";
    if (space_of(ps.minus).base.is_finite()) {
        const auto lm = sorted_labels(ps.minus);
        const auto lp = sorted_labels(ps.plus);
        std::set_intersection(lm.begin(), lm.end(), lp.begin(), lp.end(),
                              std::back_inserter(r.labels));
    } else {
        intersect_intervals(space_of(ps.minus).base.interval(),
                            space_of(ps.plus).base.interval(), r);
    }
    finish_region(r);
    return r;
}

RegionDesc minus_only_region(const PastingSpec& ps) {
    require_same_kind(ps);
    RegionDesc r;
    r.name = "minus-only";
    if (space_of(ps.minus).base.is_finite()) {
        const auto lm = sorted_labels(ps.minus);
        const auto lp = sorted_labels(ps.plus);
        std::set_difference(lm.begin(), lm.end(), lp.begin(), lp.end(),
                            std::back_inserter(r.labels));
    } else {
        subtract_intervals(space_of(ps.minus).base.interval(),
                           space_of(ps.plus).base.interval(), r);
    }
    finish_region(r);
    return r;
}

RegionDesc plus_only_region(const PastingSpec& ps) {
    require_same_kind(ps);
    RegionDesc r;
    r.name = "plus-only";
    if (space_of(ps.plus).base.is_finite()) {
        const auto lm = sorted_labels(ps.minus);
        const auto lp = sorted_labels(ps.plus);
        std::set_difference(lp.begin(), lp.end(), lm.begin(), lm.end(),
                            std::back_inserter(r.labels));
    } else {
        subtract_intervals(space_of(ps.plus).base.interval(),
                           space_of(ps.minus).base.interval(), r);
    }
    finish_region(r);
    return r;
}

RegionDesc region_union(const RegionDesc& a, const RegionDesc& b,
                        std::string name) {
    RegionDesc r;
    r.name = std::move(name);
    std::set_union(a.labels.begin(), a.labels.end(), b.labels.begin(),
                   b.labels.end(), std::back_inserter(r.labels));
    r.intervals = a.intervals;
    r.intervals.insert(r.intervals.end(), b.intervals.begin(),
                       b.intervals.end());
    r.point_coords = a.point_coords;
    r.point_coords.insert(r.point_coords.end(), b.point_coords.begin(),
                          b.point_coords.end());
    finish_region(r);
    return r;
}

void validate(const PastingSpec& ps) {
    validate_basic(ps);
    (void)make_alternating_plan(ps);  // exercises both kernel links
}

ConcatenationPlan make_alternating_plan(const PastingSpec& ps,
                                        const Truncation& truncation) {
    validate_basic(ps);
    ConcatenationPlan plan;
    plan.truncation = truncation;
    for (int n = 1; n <= 3; ++n) plan.stages.push_back(alternating_stage(ps, n));
    plan.stage_rule = [ps](int n) { return alternating_stage(ps, n); };
    validate(plan);
    return plan;
}

Path project_path(const ConcatPath& cp) {
    Path out;
    bool representation_fixed = false;
    double before = 0.0;
    for (std::size_t k = 0; k < cp.segments.size(); ++k) {
        const Path& seg = cp.segments[k].path;
        const bool live =
            !seg.events.empty() || seg.lifetime > 0.0 || seg.censored;
        if (live) {
            if (!representation_fixed) {
                out.representation = seg.representation;
                out.dt = seg.dt;
                representation_fixed = true;
            } else if (seg.representation != out.representation) {
                throw UnsupportedError(
                    "project_path: segments mix chain and diffusion "
                    "representations");
            }
        }
        for (const auto& e : seg.events) {
            double gt = before + e.time;
            // Rounding can collide a segment's late event with the next
            // revival instant; nudge by one ulp to keep times strict.
            if (!out.events.empty() && gt <= out.events.back().time)
                gt = std::nextafter(out.events.back().time, kInf);
            out.events.push_back({gt, retag(e.state, 0)});
        }
        before = cp.cumulative_lifetimes[k];
    }
    out.lifetime = cp.total_lifetime();
    out.censored = cp.censored;
    out.censor_time = cp.censor_time;
    if (!cp.segments.empty() && cp.segments.back().path.recorded_exit)
        out.recorded_exit = retag(*cp.segments.back().path.recorded_exit, 0);
    // An end-of-path nudge can land on the death time itself; that state
    // interval rounded to zero width and is not representable.
    while (!out.events.empty() && out.events.back().time >= out.lifetime)
        out.events.pop_back();
    validate(out);
    return out;
}

double first_entry_times(const Path& p, const RegionDesc& target) {
    for (const auto& e : p.events)
        if (target.contains(e.state)) return e.time;
    return kInf;
}

bool ConsistencyReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ConsistencyRow& r) { return r.pass; });
}

bool ProjectionReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ProjectionRow& r) { return r.pass; });
}

namespace {

Eigen::VectorXd vectorize(const FiniteChainSpec& c, const BoundedFn& f) {
    Eigen::VectorXd v(c.size());
    for (int i = 0; i < c.size(); ++i) v(i) = f(retag(c.point(i), 0));
    return v;
}

// Positions of each chain state inside an EntryFunctionals::interior list;
// -1 for absorbing states.
std::vector<int> interior_positions(int size, const std::vector<int>& interior) {
    std::vector<int> pos(static_cast<std::size_t>(size), -1);
    for (std::size_t j = 0; j < interior.size(); ++j)
        pos[static_cast<std::size_t>(interior[j])] = static_cast<int>(j);
    return pos;
}

constexpr double kOracleTolerance = 1e-9;

ConsistencyReport oracle_consistency(const PastingSpec& ps, double alpha,
                                     const std::vector<BoundedFn>& fs,
                                     const std::vector<BoundedFn>& gs_minus,
                                     const std::vector<BoundedFn>& gs_plus) {
    const auto* cm = std::get_if<FiniteChainSpec>(&ps.minus);
    const auto* cp = std::get_if<FiniteChainSpec>(&ps.plus);
    if (!cm || !cp)
        throw UnsupportedError(
            "check_consistency: the oracle engine needs finite chains on both "
            "sides");
    const SubGenerator sgm = from_chain(*cm);
    const SubGenerator sgp = from_chain(*cp);
    const RegionDesc sh = shared_region(ps);
    const RegionDesc mo = minus_only_region(ps);
    const RegionDesc po = plus_only_region(ps);
    std::vector<int> am, ap;
    for (int i = 0; i < cm->size(); ++i)
        if (mo.contains(cm->point(i))) am.push_back(i);
    for (int i = 0; i < cp->size(); ++i)
        if (po.contains(cp->point(i))) ap.push_back(i);

    const Eigen::VectorXd zero_m = Eigen::VectorXd::Zero(cm->size());
    const Eigen::VectorXd zero_p = Eigen::VectorXd::Zero(cp->size());
    ConsistencyReport report;
    std::vector<int> pos_m, pos_p;

    const auto emit = [&](const std::string& condition, const BoundedFn& fn,
                          const Eigen::VectorXd& lhs_by_pos,
                          const Eigen::VectorXd& rhs_by_pos) {
        for (const auto& label : sh.labels) {
            ConsistencyRow row;
            row.condition = condition;
            row.point = label;
            row.function = fn.name();
            row.lhs = lhs_by_pos(pos_m[static_cast<std::size_t>(
                cm->index_of(label))]);
            row.rhs = rhs_by_pos(pos_p[static_cast<std::size_t>(
                cp->index_of(label))]);
            row.residual = std::abs(row.lhs - row.rhs);
            row.tolerance = kOracleTolerance;
            row.pass = row.residual <= row.tolerance;
            report.rows.push_back(std::move(row));
        }
    };

    for (const BoundedFn& f : fs) {
        const EntryFunctionals em =
            exact_entry_functionals(sgm, alpha, am, vectorize(*cm, f), zero_m);
        const EntryFunctionals ep =
            exact_entry_functionals(sgp, alpha, ap, vectorize(*cp, f), zero_p);
        if (pos_m.empty()) {
            pos_m = interior_positions(cm->size(), em.interior);
            pos_p = interior_positions(cp->size(), ep.interior);
        }
        emit("1", f, em.integral_part, ep.integral_part);
    }
    for (const BoundedFn& g : gs_minus) {
        // Boundary payoff g- on the minus side; kill payoff (K+ g-) on the
        // plus side.
        Eigen::VectorXd gm = zero_m;
        for (int i : am) gm(i) = g(retag(cm->point(i), 0));
        Eigen::VectorXd gp(cp->size());
        const BoundedFn g0 = untagged(g);
        for (int i = 0; i < cp->size(); ++i)
            gp(i) = kernel_expectation(ps.kernel_plus, cp->point(i), g0);
        for (int i : ap) gp(i) = 0.0;
        const EntryFunctionals em =
            exact_entry_functionals(sgm, alpha, am, zero_m, gm);
        const EntryFunctionals ep =
            exact_entry_functionals(sgp, alpha, ap, zero_p, gp);
        if (pos_m.empty()) {
            pos_m = interior_positions(cm->size(), em.interior);
            pos_p = interior_positions(cp->size(), ep.interior);
        }
        emit("2a", g, em.boundary_part, ep.kill_part);
    }
    for (const BoundedFn& g : gs_plus) {
        Eigen::VectorXd gp = zero_p;
        for (int i : ap) gp(i) = g(retag(cp->point(i), 0));
        Eigen::VectorXd gm(cm->size());
        const BoundedFn g0 = untagged(g);
        for (int i = 0; i < cm->size(); ++i)
            gm(i) = kernel_expectation(ps.kernel_minus, cm->point(i), g0);
        for (int i : am) gm(i) = 0.0;
        const EntryFunctionals ep =
            exact_entry_functionals(sgp, alpha, ap, zero_p, gp);
        const EntryFunctionals em =
            exact_entry_functionals(sgm, alpha, am, zero_m, gm);
        if (pos_m.empty()) {
            pos_m = interior_positions(cm->size(), em.interior);
            pos_p = interior_positions(cp->size(), ep.interior);
        }
        emit("2b", g, ep.boundary_part, em.kill_part);
    }
    return report;
}

// Native start points of a shared value on both sides.
struct SharedStart {
    std::string printed;
    SpacePoint minus;
    SpacePoint plus;
};

std::vector<SharedStart> shared_starts(const PastingSpec& ps,
                                       const RegionDesc& sh,
                                       const char* caller) {
    if (!sh.intervals.empty())
        throw UnsupportedError(std::string(caller) +
                               ": the shared set is a whole interval; only "
                               "countable shared sets can be enumerated");
    const int tm = space_of(ps.minus).tag;
    const int tp = space_of(ps.plus).tag;
    std::vector<SharedStart> out;
    for (const auto& l : sh.labels)
        out.push_back({l, SpacePoint::label_point(tm, l),
                       SpacePoint::label_point(tp, l)});
    for (double c : sh.point_coords)
        out.push_back({to_string(SpacePoint::real_point(0, c)),
                       SpacePoint::real_point(tm, c),
                       SpacePoint::real_point(tp, c)});
    return out;
}

EstimateReport run_side(const SampleFn& fn, std::uint64_t seed, std::size_t n,
                        const McOptions& opts) {
    const BatchResult batch = opts.parallel
                                  ? run_replications_parallel(fn, seed, n)
                                  : run_replications_serial(fn, seed, n);
    return summarize(batch, seed, 0.0, opts.censor_cap);
}

ConsistencyRow pooled_row(std::string condition, std::string point,
                          std::string function, const EstimateReport& lhs,
                          const EstimateReport& rhs) {
    ConsistencyRow row;
    row.condition = std::move(condition);
    row.point = std::move(point);
    row.function = std::move(function);
    row.lhs = lhs.value;
    row.rhs = rhs.value;
    row.residual = std::abs(lhs.value - rhs.value);
    row.std_err = std::sqrt(lhs.std_err * lhs.std_err +
                            rhs.std_err * rhs.std_err);
    row.tolerance = 3.0 * row.std_err + lhs.bias_bound + rhs.bias_bound;
    row.pass = row.residual <= row.tolerance;
    return row;
}

ConsistencyReport mc_consistency(const PastingSpec& ps, double alpha,
                                 const std::vector<BoundedFn>& fs,
                                 const std::vector<BoundedFn>& gs_minus,
                                 const std::vector<BoundedFn>& gs_plus,
                                 const MonteCarloEngine& eng) {
    if (eng.n < 2)
        throw ConfigError("check_consistency: need at least 2 samples");
    const RegionDesc mo = minus_only_region(ps);
    const RegionDesc po = plus_only_region(ps);
    const auto starts =
        shared_starts(ps, shared_region(ps), "check_consistency");
    ConsistencyReport report;
    std::uint64_t k = 0;

    // E_x integral_0^{tau ^ zeta} e^{-alpha t} f dt for one side; the tail
    // past a censored horizon is bounded, not missing.
    const auto integral_sampler = [&](const ProcessSpec& side,
                                      const SpacePoint& start,
                                      const RegionDesc& target,
                                      const BoundedFn& f0) {
        return SampleFn([&side, start, &target, f0, alpha,
                         horizon = eng.horizon](std::uint64_t, RngStream& rng) {
            const Path p = sample_path(side, start, horizon, rng);
            const double tau = first_entry_times(p, target);
            const double value = discounted_path_integral(p, alpha, f0, tau);
            const double tail =
                (p.censored && !std::isfinite(tau))
                    ? f0.bound() * std::exp(-alpha * p.censor_time) / alpha
                    : 0.0;
            return SampleOutcome{value, p.censored, tail};
        });
    };
    // E_x(e^{-alpha tau} g(X_tau); tau < zeta): the boundary side of (2).
    const auto boundary_sampler = [&](const ProcessSpec& side,
                                      const SpacePoint& start,
                                      const RegionDesc& target,
                                      const BoundedFn& g0) {
        return SampleFn([&side, start, &target, g0, alpha,
                         horizon = eng.horizon](std::uint64_t, RngStream& rng) {
            const Path p = sample_path(side, start, horizon, rng);
            const double tau = first_entry_times(p, target);
            if (std::isfinite(tau))
                return SampleOutcome{std::exp(-alpha * tau) * g0(evaluate(p, tau)),
                                     p.censored, 0.0};
            const double tail =
                p.censored ? g0.bound() * std::exp(-alpha * p.censor_time) : 0.0;
            return SampleOutcome{0.0, p.censored, tail};
        });
    };
    // E_x(e^{-alpha zeta} (K g)(X_{zeta-}); zeta < tau): the kill side.
    const auto kill_sampler = [&](const ProcessSpec& side,
                                  const SpacePoint& start,
                                  const RegionDesc& target,
                                  const KernelSpec& kernel,
                                  const BoundedFn& g0) {
        return SampleFn([&side, start, &target, &kernel, g0, alpha,
                         horizon = eng.horizon](std::uint64_t, RngStream& rng) {
            const Path p = sample_path(side, start, horizon, rng);
            const double tau = first_entry_times(p, target);
            const bool died = !p.censored && std::isfinite(p.lifetime);
            const auto exit = exit_point(p);
            if (died && p.lifetime < tau && exit) {
                const double kg = kernel_expectation(kernel, *exit, g0);
                return SampleOutcome{std::exp(-alpha * p.lifetime) * kg,
                                     false, 0.0};
            }
            const double tail =
                (p.censored && !std::isfinite(tau))
                    ? g0.bound() * std::exp(-alpha * p.censor_time)
                    : 0.0;
            return SampleOutcome{0.0, p.censored, tail};
        });
    };

    for (const BoundedFn& f : fs) {
        const BoundedFn f0 = untagged(f);
        for (const auto& s : starts) {
            const auto lhs =
                run_side(integral_sampler(ps.minus, s.minus, mo, f0),
                         derive_seed(eng.seed, k++), eng.n, eng.opts);
            const auto rhs =
                run_side(integral_sampler(ps.plus, s.plus, po, f0),
                         derive_seed(eng.seed, k++), eng.n, eng.opts);
            report.rows.push_back(
                pooled_row("1", s.printed, f.name(), lhs, rhs));
        }
    }
    for (const BoundedFn& g : gs_minus) {
        const BoundedFn g0 = untagged(g);
        for (const auto& s : starts) {
            const auto lhs =
                run_side(boundary_sampler(ps.minus, s.minus, mo, g0),
                         derive_seed(eng.seed, k++), eng.n, eng.opts);
            const auto rhs =
                run_side(kill_sampler(ps.plus, s.plus, po, ps.kernel_plus, g0),
                         derive_seed(eng.seed, k++), eng.n, eng.opts);
            report.rows.push_back(
                pooled_row("2a", s.printed, g.name(), lhs, rhs));
        }
    }
    for (const BoundedFn& g : gs_plus) {
        const BoundedFn g0 = untagged(g);
        for (const auto& s : starts) {
            const auto lhs =
                run_side(boundary_sampler(ps.plus, s.plus, po, g0),
                         derive_seed(eng.seed, k++), eng.n, eng.opts);
            const auto rhs = run_side(
                kill_sampler(ps.minus, s.minus, mo, ps.kernel_minus, g0),
                derive_seed(eng.seed, k++), eng.n, eng.opts);
            report.rows.push_back(
                pooled_row("2b", s.printed, g.name(), lhs, rhs));
        }
    }
    return report;
}

}  // namespace

ConsistencyReport check_consistency(const PastingSpec& ps, double alpha,
                                    const std::vector<BoundedFn>& fs,
                                    const std::vector<BoundedFn>& gs_minus,
                                    const std::vector<BoundedFn>& gs_plus,
                                    const ConsistencyEngine& engine) {
    if (!(alpha > 0.0))
        throw DomainError("check_consistency: alpha must be > 0");
    validate_basic(ps);
    if (std::holds_alternative<OracleEngine>(engine))
        return oracle_consistency(ps, alpha, fs, gs_minus, gs_plus);
    return mc_consistency(ps, alpha, fs, gs_minus, gs_plus,
                          std::get<MonteCarloEngine>(engine));
}

ProjectionReport projection_criterion_test(const PastingSpec& ps, double alpha,
                                           const BoundedFn& f,
                                           const std::vector<SpacePoint>& points,
                                           std::size_t n, std::uint64_t seed,
                                           const Truncation& truncation,
                                           const McOptions& opts) {
    if (!(alpha > 0.0))
        throw DomainError("projection_criterion_test: alpha must be > 0");
    const ConcatenationPlan plan = make_alternating_plan(ps, truncation);
    const RegionDesc sh = shared_region(ps);
    const RegionDesc mo = minus_only_region(ps);
    const RegionDesc po = plus_only_region(ps);

    std::vector<SpacePoint> pts = points;
    if (pts.empty()) {
        for (const auto& s : shared_starts(ps, sh, "projection_criterion_test"))
            pts.push_back(retag(s.minus, 0));
    }

    const BoundedFn f0 = untagged(f);
    ProjectionReport report;
    std::uint64_t k = 0;
    for (const auto& raw : pts) {
        const SpacePoint base = retag(raw, 0);
        const bool in_minus = sh.contains(base) || mo.contains(base);
        const bool in_plus = sh.contains(base) || po.contains(base);
        if (!in_minus && !in_plus)
            throw ConfigError("projection_criterion_test: point " +
                              to_string(base) + " lies in neither base space");
        ProjectionRow row;
        row.point = to_string(base);
        if (!(in_minus && in_plus)) {
            // Only one parity of copies admits this start.
            row.skipped = true;
            row.note = "single-sided, skipped";
            row.pass = true;
            report.rows.push_back(std::move(row));
            continue;
        }
        const auto odd = mc_resolvent(plan, 1, retag(base, 1), alpha, f0, n,
                                      derive_seed(seed, k++), opts);
        const auto even = mc_resolvent(plan, 2, retag(base, 2), alpha, f0, n,
                                       derive_seed(seed, k++), opts);
        row.odd_estimate = odd.value;
        row.even_estimate = even.value;
        row.difference = odd.value - even.value;
        row.pooled_std_err = std::sqrt(odd.std_err * odd.std_err +
                                       even.std_err * even.std_err);
        row.bias_budget = odd.bias_bound + even.bias_bound;
        row.pass = std::abs(row.difference) <=
                   3.0 * row.pooled_std_err + row.bias_budget;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace concatmc
