#include <cmath>
#include <limits>

#include "doctest.h"

#include "concatmc/errors.hpp"
#include "concatmc/estimate.hpp"

using namespace concatmc;

namespace {

FiniteChainSpec killed_state(int tag, const std::string& label, double rate) {
    FiniteChainSpec c;
    c.space = TaggedSpace{tag, StateSpaceDesc{FiniteLabels{{label}}}};
    c.rates = {{0.0}};
    c.kill = {rate};
    return c;
}

ConcatenationPlan two_stage_plan() {
    ConcatenationPlan plan;
    plan.stages.push_back(
        {ProcessSpec{killed_state(1, "a", 1.0)},
         KernelSpec{DiracKernel{SpacePoint::label_point(2, "b")}}});
    plan.stages.push_back({ProcessSpec{killed_state(2, "b", 2.0)}, std::nullopt});
    return plan;
}

Path constant_path(const SpacePoint& at, double lifetime) {
    Path p;
    p.events = {{0.0, at}};
    p.lifetime = lifetime;
    return p;
}

const SpacePoint pt_a = SpacePoint::label_point(1, "a");

}  // namespace

TEST_CASE("discounted integrals of one-state paths match the closed form") {
    const BoundedFn f = BoundedFn::constant(2.0);
    const double alpha = 0.7;
    const Path p = constant_path(pt_a, 1.3);

    const double full = 2.0 * (1.0 - std::exp(-alpha * 1.3)) / alpha;
    CHECK(discounted_path_integral(p, alpha, f, kInf) ==
          doctest::Approx(full).epsilon(1e-14));
    // A cap inside the lifetime stops the integral there.
    const double capped = 2.0 * (1.0 - std::exp(-alpha * 0.4)) / alpha;
    CHECK(discounted_path_integral(p, alpha, f, 0.4) ==
          doctest::Approx(capped).epsilon(1e-14));
    // A cap beyond the lifetime changes nothing.
    CHECK(discounted_path_integral(p, alpha, f, 50.0) ==
          doctest::Approx(full).epsilon(1e-14));

    // Immortal path, infinite cap: the full resolvent mass f/alpha.
    const Path immortal = constant_path(pt_a, kInf);
    CHECK(discounted_path_integral(immortal, alpha, f, kInf) ==
          doctest::Approx(2.0 / alpha).epsilon(1e-14));

    CHECK(discounted_path_integral(Path::dead(), alpha, f, kInf) == 0.0);
    CHECK_THROWS_AS(discounted_path_integral(p, 0.0, f, kInf), DomainError);
}

TEST_CASE("the composite integral discounts each segment by its start time") {
    ConcatPath cp;
    cp.segments.push_back({1, constant_path(SpacePoint::label_point(1, "a"), 1.5),
                           SpacePoint::label_point(2, "b")});
    cp.segments.push_back(
        {2, constant_path(SpacePoint::label_point(2, "b"), 2.0), std::nullopt});
    cp.cumulative_lifetimes = {1.5, 3.5};

    const BoundedFn f = BoundedFn::label_table({{"a", 2.0}, {"b", 4.0}}, true);
    const double alpha = 1.0;
    const double expected = 2.0 * (1.0 - std::exp(-1.5)) +
                            4.0 * std::exp(-1.5) * (1.0 - std::exp(-2.0));
    CHECK(discounted_concat_integral(cp, alpha, f, kInf) ==
          doctest::Approx(expected).epsilon(1e-13));
    // Capping at the revival keeps only the first segment.
    CHECK(discounted_concat_integral(cp, alpha, f, 1.5) ==
          doctest::Approx(2.0 * (1.0 - std::exp(-1.5))).epsilon(1e-13));
}

TEST_CASE("summarize reports mean, spread, tails and censoring") {
    BatchResult batch;
    batch.values = {1.0, 3.0};
    batch.censored = {0, 1};
    batch.tail_bounds = {0.0, 0.5};
    const EstimateReport r = summarize(batch, 99, 0.25, 0.01);
    CHECK(r.value == 2.0);
    CHECK(r.std_err == doctest::Approx(1.0));  // sd sqrt(2), /sqrt(2)
    CHECK(r.bias_bound == doctest::Approx(0.25 + 0.25));
    CHECK(r.censored_fraction == 0.5);
    CHECK(r.flagged);
    CHECK(r.seed == 99);
    CHECK(r.error_budget(3.0) == doctest::Approx(3.0 * r.std_err + r.bias_bound));

    batch.censored = {0, 0};
    CHECK_FALSE(summarize(batch, 99, 0.0, 0.01).flagged);

    // A single replicate has no spread estimate; it must not fake one.
    BatchResult single;
    single.values = {4.0};
    single.censored = {0};
    single.tail_bounds = {0.0};
    const EstimateReport s = summarize(single, 1, 0.0, 0.01);
    CHECK(s.value == 4.0);
    CHECK(s.std_err == 0.0);
}

TEST_CASE("the resolvent estimator hits the closed form for Exp(1)") {
    // U_1 1 (a) = 1 / (1 + 1) = 0.5.
    const ProcessSpec spec{killed_state(1, "a", 1.0)};
    const BoundedFn one = BoundedFn::constant(1.0);
    const EstimateReport r = mc_resolvent(spec, pt_a, 1.0, one, 20000, 7, 1e6);
    CHECK(r.n_samples == 20000);
    CHECK(r.std_err > 0.0);
    CHECK(r.bias_bound == 0.0);  // nothing was censored
    CHECK(std::abs(r.value - 0.5) < r.error_budget(4.0));

    CHECK_THROWS_AS(mc_resolvent(spec, pt_a, 1.0, one, 1, 7, 1e6), ConfigError);
    CHECK_THROWS_AS(mc_resolvent(spec, pt_a, 0.0, one, 100, 7, 1e6), DomainError);
}

TEST_CASE("the composite resolvent estimator agrees with the block oracle") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn one = BoundedFn::constant(1.0);
    const EstimateReport r = mc_resolvent(plan, 1, pt_a, 1.0, one, 20000, 8);
    // Exact value 2/3 from the assembled generator.
    CHECK(std::abs(r.value - 2.0 / 3.0) < r.error_budget(4.0));
}

TEST_CASE("the semigroup estimator sees the survival probability") {
    const ProcessSpec spec{killed_state(1, "a", 1.0)};
    const BoundedFn one = BoundedFn::constant(1.0);
    const EstimateReport r = mc_semigroup(spec, pt_a, 0.5, one, 20000, 9);
    CHECK(std::abs(r.value - std::exp(-0.5)) < r.error_budget(4.0));
    CHECK_THROWS_AS(mc_semigroup(spec, pt_a, -0.5, one, 100, 9), DomainError);
}

TEST_CASE("mean lifetime flags itself when the horizon bites") {
    const ProcessSpec spec{killed_state(1, "a", 1.0)};
    const EstimateReport full = mc_mean_lifetime(spec, pt_a, 1e6, 20000, 10);
    CHECK(std::abs(full.value - 1.0) < full.error_budget(4.0));
    CHECK_FALSE(full.flagged);

    const EstimateReport cut = mc_mean_lifetime(spec, pt_a, 0.5, 20000, 10);
    CHECK(cut.flagged);  // ~61% of Exp(1) draws exceed 0.5
    CHECK(cut.censored_fraction > 0.5);
    CHECK(cut.value < full.value);
}

TEST_CASE("the stopped-resolvent residual vanishes in expectation") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn one = BoundedFn::constant(1.0);
    // Continuation at X_{R^1} = b: the remaining composite is Exp(2) alone.
    const OracleContinuation cont{
        [](const SpacePoint&) { return 1.0 / 3.0; }};
    const EstimateReport r = dynkin_residual(
        plan, 1, pt_a, StopAtRevival{1}, 1.0, one, 5000, 11, Continuation{cont});
    CHECK(std::abs(r.value) < r.error_budget(4.0));
    CHECK(r.std_err > 0.0);  // the identity holds in mean, not pathwise
}

TEST_CASE("a stopping time of zero collapses the residual exactly") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn one = BoundedFn::constant(1.0);
    const StopAtRegion everywhere{[](const SpacePoint&) { return true; }, "all"};
    const EstimateReport r =
        dynkin_residual(plan, 1, pt_a, StoppingRule{everywhere}, 1.0, one, 500,
                        12, Continuation{NestedMcContinuation{16}});
    CHECK(r.value == 0.0);    // every replicate is an exact 0
    CHECK(r.std_err == 0.0);
    CHECK(r.bias_bound == 0.0);
}

TEST_CASE("a zero test function produces an exact zero residual") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn zero = BoundedFn::constant(0.0);
    const OracleContinuation cont{[](const SpacePoint&) { return 0.0; }};
    const EstimateReport r = dynkin_residual(
        plan, 1, pt_a, StopAtRevival{1}, 1.0, zero, 500, 13, Continuation{cont});
    CHECK(r.value == 0.0);
    CHECK(r.std_err == 0.0);
}

TEST_CASE("nested continuations require a sane inner sample size") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn one = BoundedFn::constant(1.0);
    CHECK_THROWS_AS(dynkin_residual(plan, 1, pt_a, StopAtRevival{1}, 1.0, one,
                                    100, 14, Continuation{NestedMcContinuation{4}}),
                    ConfigError);
}

TEST_CASE("the revival gap is identically zero for Dirac kernels") {
    const ConcatenationPlan plan = two_stage_plan();
    const BoundedFn f = BoundedFn::label_table({{"b", 3.0}}, true);
    const EstimateReport r =
        revival_formula_test(plan, 1, pt_a, 1, f, GFunctional{}, 2000, 15);
    CHECK(r.value == 0.0);  // bitwise: f(X_R) == (Kf)(exit) on every path
    CHECK(r.std_err == 0.0);
}

TEST_CASE("the revival gap is a mean zero for a split table kernel") {
    ConcatenationPlan plan;
    plan.stages.push_back(
        {ProcessSpec{killed_state(1, "a", 1.0)},
         make_exit_table({{SpacePoint::label_point(1, "a"),
                           {{SpacePoint::label_point(2, "b1"), 0.3},
                            {SpacePoint::label_point(2, "b2"), 0.7}}}})});
    FiniteChainSpec second;
    second.space = TaggedSpace{2, StateSpaceDesc{FiniteLabels{{"b1", "b2"}}}};
    second.rates = {{0.0, 0.5}, {0.0, 0.0}};
    second.kill = {0.2, 0.8};
    plan.stages.push_back({ProcessSpec{second}, std::nullopt});
    validate(plan);

    const BoundedFn f = BoundedFn::label_table({{"b1", 1.0}}, false, 2);
    const EstimateReport plain =
        revival_formula_test(plan, 1, pt_a, 1, f, GFunctional{}, 10000, 16);
    CHECK(std::abs(plain.value) < plain.error_budget(4.0));
    CHECK(plain.std_err > 0.0);

    // The same check under a pre-revival functional G = 1_{X_0 = a}.
    GFunctional g;
    g.times = {0.0};
    g.funcs = {BoundedFn::indicator(pt_a)};
    const EstimateReport weighted =
        revival_formula_test(plan, 1, pt_a, 1, f, g, 10000, 17);
    CHECK(std::abs(weighted.value) < weighted.error_budget(4.0));
}

TEST_CASE("revival test argument validation") {
    ConcatenationPlan plan = two_stage_plan();
    const BoundedFn one = BoundedFn::constant(1.0);
    plan.truncation.max_revivals = 0;
    CHECK_THROWS_AS(
        revival_formula_test(plan, 1, pt_a, 1, one, GFunctional{}, 100, 18),
        ConfigError);  // tested revival beyond the truncation cap
    plan.truncation.max_revivals = 10;
    GFunctional bad;
    bad.times = {1.0, 0.5};
    bad.funcs = {one, one};
    CHECK_THROWS_AS(revival_formula_test(plan, 1, pt_a, 1, one, bad, 100, 18),
                    ConfigError);
    bad.times = {1.0};
    CHECK_THROWS_AS(revival_formula_test(plan, 1, pt_a, 1, one, bad, 100, 18),
                    ConfigError);  // times/functions length mismatch
}

TEST_CASE("Laplace inversion is exact on the transform of a constant") {
    // phi(alpha) = 1/alpha is the transform of 1; its scaled derivative
    // sequence is constant: s_j = 1/alpha.
    const ScaledDerivativeOracle oracle = [](double alpha, int order) {
        return std::vector<double>(static_cast<std::size_t>(order) + 1,
                                   1.0 / alpha);
    };
    for (int k : {1, 2, 4, 64}) {
        CHECK(post_widder_invert(oracle, 1.0, k) == 1.0);  // power-of-two alpha
    }
    for (int k : {3, 5, 7, 49}) {
        CHECK(std::abs(post_widder_invert(oracle, 1.0, k) - 1.0) <=
              std::numeric_limits<double>::epsilon());
    }
    CHECK_THROWS_AS(post_widder_invert(oracle, 0.0, 8), DomainError);
    CHECK_THROWS_AS(post_widder_invert(oracle, 1.0, 0), DomainError);

    const ScaledDerivativeOracle confused = [](double, int) {
        return std::vector<double>{1.0};
    };
    CHECK_THROWS_AS(post_widder_invert(confused, 1.0, 4), NumericError);
}

TEST_CASE("inversion error shrinks with the order on a smooth transform") {
    // phi(alpha) = 1/(1+alpha), the transform of e^{-t}:
    // s_j = alpha^j / (1+alpha)^{j+1}, and the order-k estimate at t is
    // (k/(k+1))^{k+1} for t = 1.
    const ScaledDerivativeOracle oracle = [](double alpha, int order) {
        std::vector<double> s;
        double v = 1.0 / (1.0 + alpha);
        s.push_back(v);
        for (int j = 1; j <= order; ++j) {
            v *= alpha / (1.0 + alpha);
            s.push_back(v);
        }
        return s;
    };
    const double truth = std::exp(-1.0);
    const double e16 = std::abs(post_widder_invert(oracle, 1.0, 16) - truth);
    const double e64 = std::abs(post_widder_invert(oracle, 1.0, 64) - truth);
    CHECK(e64 / truth < 0.01);
    CHECK(e64 < e16);
}

TEST_CASE("the chain derivative oracle reproduces the scalar closed form") {
    // One state, kill rate 1: phi(alpha) = 1/(alpha+1), so the scaled
    // derivatives are s_j = alpha^j / (1+alpha)^{j+1}.
    const SubGenerator sg = from_chain(killed_state(1, "a", 1.0));
    Eigen::VectorXd f(1);
    f << 1.0;
    const ScaledDerivativeOracle oracle = make_chain_derivative_oracle(sg, f, 0);
    const double alpha = 2.0;
    const std::vector<double> s = oracle(alpha, 5);
    REQUIRE(s.size() == 6);
    double expect = 1.0 / (1.0 + alpha);
    for (int j = 0; j <= 5; ++j) {
        CHECK(s[static_cast<std::size_t>(j)] ==
              doctest::Approx(expect).epsilon(1e-12));
        expect *= alpha / (1.0 + alpha);
    }
    CHECK_THROWS_AS(make_chain_derivative_oracle(sg, f, 3), ConfigError);
    CHECK_THROWS_AS(make_chain_derivative_oracle(sg, f, -1), ConfigError);
}
