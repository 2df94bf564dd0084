#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "doctest.h"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "concatmc/estimate.hpp"
#include "concatmc/process.hpp"

using namespace concatmc;

namespace {

// A sampler that exercises every BatchResult field and burns a
// replicate-dependent amount of randomness, so any stream sharing or
// schedule dependence between workers would show up as changed bits.
SampleOutcome mixing_sampler(std::uint64_t stream_id, RngStream& rng) {
    double v = 0.0;
    const int draws = 1 + static_cast<int>(stream_id % 5);
    for (int i = 0; i < draws; ++i) v += -std::log(rng.u01());
    SampleOutcome s;
    s.value = v;
    s.censored = (stream_id % 7) == 0;
    s.tail_bound = s.censored ? rng.u01() : 0.0;
    return s;
}

FiniteChainSpec three_state_chain() {
    FiniteChainSpec c;
    c.space = TaggedSpace{1, StateSpaceDesc{FiniteLabels{{"a", "b", "c"}}}};
    c.rates = {{0.0, 1.0, 0.0}, {0.3, 0.0, 0.5}, {0.2, 0.0, 0.0}};
    c.kill = {0.2, 0.4, 0.1};
    return c;
}

bool same_bits(const EstimateReport& a, const EstimateReport& b) {
    return a.value == b.value && a.std_err == b.std_err &&
           a.bias_bound == b.bias_bound && a.n_samples == b.n_samples &&
           a.censored_fraction == b.censored_fraction;
}

}  // namespace

TEST_CASE("serial and parallel engines fill identical arrays") {
    const BatchResult serial = run_replications_serial(mixing_sampler, 42, 1000);
    const BatchResult parallel =
        run_replications_parallel(mixing_sampler, 42, 1000);
    REQUIRE(serial.values.size() == 1000);
    REQUIRE(parallel.values.size() == 1000);
    CHECK(serial.values == parallel.values);            // bitwise, not approx
    CHECK(serial.censored == parallel.censored);
    CHECK(serial.tail_bounds == parallel.tail_bounds);
}

TEST_CASE("estimator reports do not depend on the engine") {
    const ProcessSpec spec{three_state_chain()};
    const SpacePoint start = SpacePoint::label_point(1, "a");
    const BoundedFn f = BoundedFn::indicator(SpacePoint::label_point(1, "c"));

    McOptions serial_opts;
    serial_opts.parallel = false;
    const EstimateReport s =
        mc_resolvent(spec, start, 1.0, f, 20000, 77, 1e6, serial_opts);
    const EstimateReport p = mc_resolvent(spec, start, 1.0, f, 20000, 77, 1e6);
    CHECK(same_bits(s, p));

    const EstimateReport sg_s =
        mc_semigroup(spec, start, 0.7, f, 10000, 78, serial_opts);
    const EstimateReport sg_p = mc_semigroup(spec, start, 0.7, f, 10000, 78);
    CHECK(same_bits(sg_s, sg_p));
}

TEST_CASE("results are invariant under the thread count") {
#ifdef _OPENMP
    const int before = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const BatchResult one = run_replications_parallel(mixing_sampler, 9, 500);
#ifdef _OPENMP
    omp_set_num_threads(4);
#endif
    const BatchResult four = run_replications_parallel(mixing_sampler, 9, 500);
#ifdef _OPENMP
    omp_set_num_threads(before);
#endif
    CHECK(one.values == four.values);
    CHECK(one.tail_bounds == four.tail_bounds);
}

TEST_CASE("a throwing sampler surfaces from the parallel engine") {
    const SampleFn poisoned = [](std::uint64_t stream_id,
                                 RngStream& rng) -> SampleOutcome {
        if (stream_id == 17) throw std::runtime_error("replicate 17 failed");
        return {rng.u01(), false, 0.0};
    };
    CHECK_THROWS_AS(run_replications_parallel(poisoned, 1, 100),
                    std::runtime_error);
    CHECK_THROWS_AS(run_replications_serial(poisoned, 1, 100),
                    std::runtime_error);
}
