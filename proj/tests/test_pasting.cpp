#include <cmath>

#include "doctest.h"

#include "concatmc/errors.hpp"
#include "concatmc/pasting.hpp"

using namespace concatmc;

namespace {

FiniteChainSpec chain(int tag, std::vector<std::string> labels,
                      std::vector<std::vector<double>> rates,
                      std::vector<double> kill) {
    FiniteChainSpec c;
    c.space = TaggedSpace{tag, StateSpaceDesc{FiniteLabels{std::move(labels)}}};
    c.rates = std::move(rates);
    c.kill = std::move(kill);
    return c;
}

IntervalDiffusionSpec diffusion(int tag, double lo, double hi) {
    IntervalDiffusionSpec d;
    d.space = TaggedSpace{tag, StateSpaceDesc{RealInterval{lo, hi, true, true}}};
    return d;
}

// Both sides the same conservative two-state chain: pasting two copies of a
// process along its whole space.  The kernels are never exercised (no kill
// mass) but must still wire up.
PastingSpec identical_kill_free() {
    PastingSpec ps;
    ps.minus = ProcessSpec{chain(1, {"u", "v"}, {{0.0, 1.0}, {2.0, 0.0}}, {0.0, 0.0})};
    ps.plus = ProcessSpec{chain(2, {"u", "v"}, {{0.0, 1.0}, {2.0, 0.0}}, {0.0, 0.0})};
    ps.kernel_minus = KernelSpec{DiracKernel{SpacePoint::label_point(2, "u")}};
    ps.kernel_plus = KernelSpec{DiracKernel{SpacePoint::label_point(1, "u")}};
    return ps;
}

// Both sides the killed single state with instant Dirac revival at itself.
PastingSpec identical_killed() {
    PastingSpec ps;
    ps.minus = ProcessSpec{chain(1, {"a"}, {{0.0}}, {1.0})};
    ps.plus = ProcessSpec{chain(2, {"a"}, {{0.0}}, {1.0})};
    ps.kernel_minus = KernelSpec{DiracKernel{SpacePoint::label_point(2, "a")}};
    ps.kernel_plus = KernelSpec{DiracKernel{SpacePoint::label_point(1, "a")}};
    return ps;
}

// Shared state s, but the two sides leave it at different rates: no pasted
// process can restrict to both.
PastingSpec violating_pair() {
    PastingSpec ps;
    ps.minus = ProcessSpec{chain(1, {"l", "s"}, {{0.0, 0.0}, {1.0, 0.0}}, {0.0, 0.0})};
    ps.plus = ProcessSpec{chain(2, {"p", "s"}, {{0.0, 0.0}, {2.0, 0.0}}, {0.0, 0.0})};
    ps.kernel_minus = KernelSpec{DiracKernel{SpacePoint::label_point(2, "s")}};
    ps.kernel_plus = KernelSpec{DiracKernel{SpacePoint::label_point(1, "s")}};
    return ps;
}

}  // namespace

TEST_CASE("label regions: overlap and one-sided remainders") {
    const PastingSpec ps = violating_pair();
    const RegionDesc sh = shared_region(ps);
    const RegionDesc mo = minus_only_region(ps);
    const RegionDesc po = plus_only_region(ps);
    CHECK(sh.labels == std::vector<std::string>{"s"});
    CHECK(mo.labels == std::vector<std::string>{"l"});
    CHECK(po.labels == std::vector<std::string>{"p"});
    // Tag-blind membership.
    CHECK(sh.contains(SpacePoint::label_point(5, "s")));
    CHECK_FALSE(sh.contains(SpacePoint::label_point(0, "l")));
    CHECK_FALSE(sh.contains(SpacePoint::cemetery()));
    CHECK_FALSE(mo.empty());

    const RegionDesc both = region_union(mo, po, "either");
    CHECK(both.labels == std::vector<std::string>({"l", "p"}));
    CHECK(both.contains(SpacePoint::label_point(1, "l")));
    CHECK_FALSE(both.contains(SpacePoint::label_point(1, "s")));
}

TEST_CASE("interval regions: overlap, remainders and bare glue points") {
    PastingSpec ps;
    ps.minus = ProcessSpec{diffusion(1, 0.0, 2.0)};
    ps.plus = ProcessSpec{diffusion(2, 1.0, 3.0)};
    ps.kernel_minus = KernelSpec{DiracKernel{SpacePoint::real_point(2, 1.5)}};
    ps.kernel_plus = KernelSpec{DiracKernel{SpacePoint::real_point(1, 1.5)}};

    const RegionDesc sh = shared_region(ps);
    REQUIRE(sh.intervals.size() == 1);
    CHECK(sh.intervals[0].lo == 1.0);
    CHECK(sh.intervals[0].hi == 2.0);
    CHECK(sh.contains(SpacePoint::real_point(0, 1.0)));
    CHECK(sh.contains(SpacePoint::real_point(0, 2.0)));

    const RegionDesc mo = minus_only_region(ps);
    REQUIRE(mo.intervals.size() == 1);
    CHECK(mo.intervals[0].lo == 0.0);
    CHECK(mo.intervals[0].hi == 1.0);
    CHECK(mo.contains(SpacePoint::real_point(0, 0.5)));
    CHECK_FALSE(mo.contains(SpacePoint::real_point(0, 1.0)));  // half open

    const RegionDesc po = plus_only_region(ps);
    REQUIRE(po.intervals.size() == 1);
    CHECK_FALSE(po.contains(SpacePoint::real_point(0, 2.0)));
    CHECK(po.contains(SpacePoint::real_point(0, 2.5)));

    // Touching closed intervals overlap in exactly one glue point.
    PastingSpec touch = ps;
    touch.minus = ProcessSpec{diffusion(1, 0.0, 1.0)};
    touch.plus = ProcessSpec{diffusion(2, 1.0, 2.0)};
    const RegionDesc glue = shared_region(touch);
    CHECK(glue.intervals.empty());
    CHECK(glue.point_coords == std::vector<double>{1.0});
    CHECK(glue.contains(SpacePoint::real_point(0, 1.0)));
}

TEST_CASE("pasting validation rejects mismatched or disjoint sides") {
    SUBCASE("one finite base, one interval base") {
        PastingSpec ps = identical_kill_free();
        ps.plus = ProcessSpec{diffusion(2, 0.0, 1.0)};
        CHECK_THROWS_AS(validate(ps), ConfigError);
    }
    SUBCASE("no overlap") {
        PastingSpec ps = identical_kill_free();
        ps.plus = ProcessSpec{chain(2, {"x"}, {{0.0}}, {0.0})};
        CHECK_THROWS_AS(validate(ps), ConfigError);
    }
    CHECK_NOTHROW(validate(identical_kill_free()));
    CHECK_NOTHROW(validate(identical_killed()));
    CHECK_NOTHROW(validate(violating_pair()));
}

TEST_CASE("the alternating plan interleaves tagged copies of the two sides") {
    const ConcatenationPlan plan = make_alternating_plan(violating_pair());
    REQUIRE(plan.stages.size() == 3);
    CHECK(space_of(plan.stage(1).process).tag == 1);
    CHECK(base_contains(space_of(plan.stage(1).process).base,
                        SpacePoint::label_point(1, "l")));  // minus copy
    CHECK(space_of(plan.stage(2).process).tag == 2);
    CHECK(base_contains(space_of(plan.stage(2).process).base,
                        SpacePoint::label_point(2, "p")));  // plus copy
    // Stage 4 comes from the rule: an even (plus) copy on tag 4.
    const Stage s4 = plan.stage(4);
    CHECK(space_of(s4.process).tag == 4);
    CHECK(base_contains(space_of(s4.process).base, SpacePoint::label_point(4, "p")));
    REQUIRE(s4.kernel.has_value());
    CHECK(std::get<DiracKernel>(s4.kernel->kernel).target ==
          SpacePoint::label_point(5, "s"));
    // Stage 1's kernel targets the tag-2 copy.
    REQUIRE(plan.stage(1).kernel.has_value());
    CHECK(std::get<DiracKernel>(plan.stage(1).kernel->kernel).target ==
          SpacePoint::label_point(2, "s"));
}

TEST_CASE("projection erases tags and preserves the trajectory") {
    Truncation tr;
    tr.max_revivals = 3;
    const ConcatenationPlan plan = make_alternating_plan(identical_killed(), tr);
    RngStream rng(41, 0);
    const ConcatPath cp =
        sample_concatenated(plan, 1, SpacePoint::label_point(1, "a"), rng);
    REQUIRE(cp.segments.size() == 4);  // 3 revivals allowed

    const Path projected = project_path(cp);
    CHECK(projected.lifetime == cp.total_lifetime());
    CHECK_FALSE(projected.censored);
    for (const auto& e : projected.events) CHECK(e.state.tag == 0);
    for (double t : {0.0, 0.3, 1.1, 2.7}) {
        if (t < cp.total_lifetime()) {
            CHECK(evaluate(projected, t) == retag(evaluate_concat(cp, t), 0));
        }
    }
    CHECK(evaluate(projected, projected.lifetime).is_cemetery());
}

TEST_CASE("projection refuses to merge chain and diffusion segments") {
    ConcatPath cp;
    Path pc;
    pc.events = {{0.0, SpacePoint::label_point(1, "a")}};
    pc.lifetime = 1.0;
    Path grid;
    grid.representation = Path::Representation::Grid;
    grid.dt = 0.1;
    grid.events = {{0.0, SpacePoint::real_point(2, 0.5)}};
    grid.lifetime = 0.2;
    cp.segments.push_back({1, pc, SpacePoint::real_point(2, 0.5)});
    cp.segments.push_back({2, grid, std::nullopt});
    cp.cumulative_lifetimes = {1.0, 1.2};
    CHECK_THROWS_AS(project_path(cp), UnsupportedError);
}

TEST_CASE("first entry times read the event representation") {
    Path p;
    p.events = {{0.0, SpacePoint::label_point(1, "s")},
                {1.0, SpacePoint::label_point(1, "l")}};
    p.lifetime = 2.0;
    RegionDesc at_l;
    at_l.labels = {"l"};
    RegionDesc at_s;
    at_s.labels = {"s"};
    RegionDesc elsewhere;
    elsewhere.labels = {"zzz"};
    CHECK(first_entry_times(p, at_s) == 0.0);
    CHECK(first_entry_times(p, at_l) == 1.0);
    CHECK(std::isinf(first_entry_times(p, elsewhere)));
}

TEST_CASE("a kill-free identical pair satisfies every oracle condition exactly") {
    const PastingSpec ps = identical_kill_free();
    const std::vector<BoundedFn> fs = {
        BoundedFn::constant(1.0),
        BoundedFn::label_table({{"u", 2.0}, {"v", -0.5}}, true)};
    const std::vector<BoundedFn> gs = {BoundedFn::constant(1.0)};
    const ConsistencyReport report =
        check_consistency(ps, 1.0, fs, gs, gs, OracleEngine{});
    REQUIRE(report.rows.size() == 2 * 2 + 2 + 2);  // per shared label
    for (const auto& row : report.rows) {
        CHECK(row.residual == 0.0);  // exact zeros, not small numbers
        CHECK(row.pass);
    }
    CHECK(report.all_pass());
}

TEST_CASE("a killed identical pair genuinely breaks condition (2a)") {
    // With no one-sided region, tau = inf: the boundary side of (2a) is 0,
    // while the kill side collects c/(alpha+c) = 1/2.  Identical sides are
    // consistent by construction, so this documents that (1)+(2) are
    // sufficient, not necessary, once kill mass flows through the kernels.
    const PastingSpec ps = identical_killed();
    const std::vector<BoundedFn> gs = {BoundedFn::constant(1.0)};
    const ConsistencyReport report =
        check_consistency(ps, 1.0, {}, gs, gs, OracleEngine{});
    REQUIRE(report.rows.size() == 2);
    for (const auto& row : report.rows) {
        CHECK(row.residual == doctest::Approx(0.5).epsilon(1e-12));
        CHECK_FALSE(row.pass);
    }
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("the violating pair fails condition (1) by exactly one sixth") {
    // From s the minus side reaches its private state at rate 1, the plus
    // side at rate 2: the tau-limited resolvents are 1/2 and 1/3.
    const PastingSpec ps = violating_pair();
    const std::vector<BoundedFn> fs = {BoundedFn::constant(1.0)};
    const ConsistencyReport report =
        check_consistency(ps, 1.0, fs, {}, {}, OracleEngine{});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].condition == "1");
    CHECK(report.rows[0].point == "s");
    CHECK(report.rows[0].lhs == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.rows[0].rhs == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(report.rows[0].residual == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("the Monte Carlo engine agrees with the oracle verdicts") {
    MonteCarloEngine eng;
    eng.n = 4000;
    eng.seed = 3;
    eng.horizon = 10.0;  // conservative chains never die; censor early

    SUBCASE("kill-free identical pair passes") {
        const std::vector<BoundedFn> fs = {
            BoundedFn::constant(1.0),
            BoundedFn::label_table({{"u", 1.0}}, true)};
        const std::vector<BoundedFn> gs = {BoundedFn::constant(1.0)};
        const ConsistencyReport report = check_consistency(
            identical_kill_free(), 1.0, fs, gs, gs, ConsistencyEngine{eng});
        CHECK(report.all_pass());
        for (const auto& row : report.rows) CHECK(row.tolerance > 0.0);
    }
    SUBCASE("violating pair fails condition (1) loudly") {
        const std::vector<BoundedFn> fs = {BoundedFn::constant(1.0)};
        const ConsistencyReport report = check_consistency(
            violating_pair(), 1.0, fs, {}, {}, ConsistencyEngine{eng});
        REQUIRE(report.rows.size() == 1);
        CHECK_FALSE(report.rows[0].pass);
        CHECK(report.rows[0].residual > 0.1);
    }
}

TEST_CASE("engines refuse what they cannot evaluate") {
    PastingSpec ps;
    ps.minus = ProcessSpec{diffusion(1, 0.0, 2.0)};
    ps.plus = ProcessSpec{diffusion(2, 1.0, 3.0)};
    ps.kernel_minus = KernelSpec{DiracKernel{SpacePoint::real_point(2, 1.5)}};
    ps.kernel_plus = KernelSpec{DiracKernel{SpacePoint::real_point(1, 1.5)}};
    const std::vector<BoundedFn> fs = {BoundedFn::constant(1.0)};

    // Diffusions have no finite generator matrix.
    CHECK_THROWS_AS(check_consistency(ps, 1.0, fs, {}, {}, OracleEngine{}),
                    UnsupportedError);
    // A whole shared interval cannot be enumerated point by point.
    MonteCarloEngine eng;
    eng.n = 100;
    CHECK_THROWS_AS(check_consistency(ps, 1.0, fs, {}, {}, ConsistencyEngine{eng}),
                    UnsupportedError);
}

TEST_CASE("the projection criterion flags the violating pair") {
    const BoundedFn f = BoundedFn::label_table({{"s", 1.0}}, true);
    const ProjectionReport report = projection_criterion_test(
        violating_pair(), 1.0, f, {}, 20000, 51);
    REQUIRE(report.rows.size() == 1);
    const ProjectionRow& row = report.rows[0];
    CHECK_FALSE(row.skipped);
    CHECK_FALSE(row.pass);
    // Odd copies start in the slow side (resolvent 1/2), even in the fast
    // one (1/3): the signed gap is positive and far beyond noise.
    CHECK(row.difference > 0.1);
    CHECK(row.difference > 10.0 * row.pooled_std_err);
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("the projection criterion accepts an honestly pasted pair") {
    Truncation tr;
    tr.max_revivals = 60;  // total lifetime ~ Gamma(61): tail is negligible
    const BoundedFn f = BoundedFn::label_table({{"a", 1.0}}, true);
    const ProjectionReport report = projection_criterion_test(
        identical_killed(), 1.0, f, {}, 5000, 52, tr);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].pass);
    CHECK(report.all_pass());
}

TEST_CASE("one-sided points are reported, not tested") {
    const BoundedFn f = BoundedFn::constant(1.0);
    const ProjectionReport report = projection_criterion_test(
        violating_pair(), 1.0, f, {SpacePoint::label_point(0, "l")}, 100, 53);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].skipped);
    CHECK(report.rows[0].pass);
    CHECK(report.rows[0].note == "single-sided, skipped");

    CHECK_THROWS_AS(
        projection_criterion_test(violating_pair(), 1.0, f,
                                  {SpacePoint::label_point(0, "zzz")}, 100, 53),
        ConfigError);
}
