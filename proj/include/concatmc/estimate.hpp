#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "concatmc/concat.hpp"
#include "concatmc/functions.hpp"
#include "concatmc/oracle.hpp"

namespace concatmc {

// A Monte Carlo point estimate.  std_err is always the plain sample standard
// deviation over sqrt(n); systematic truncation error is carried separately
// in bias_bound and enters test arithmetic through error_budget, never by
// inflating std_err itself.
struct EstimateReport {
    double value = 0.0;
    double std_err = 0.0;
    double bias_bound = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    double censored_fraction = 0.0;
    bool flagged = false;  // censored_fraction exceeded the cap

    double error_budget(double sigmas) const {
        return sigmas * std_err + bias_bound;
    }
};

struct McOptions {
    double censor_cap = 0.01;  // flag the report beyond this censored fraction
    bool parallel = true;      // use the OpenMP engine (results are identical)
};

// --- Replication engine -------------------------------------------------
//
// Replicate i always draws from RngStream(seed, i) and writes values[i];
// the reduction over the filled arrays is a separate single-threaded
// in-order pass.  The parallel engine therefore produces bit-identical
// results to the serial reference for any thread count.

struct SampleOutcome {
    double value = 0.0;
    bool censored = false;
    // Upper bound on this replicate's unobserved tail: exactly 0 for a fully
    // observed path, e^{-alpha * data end} * payoff bound when the path was
    // censored or truncated before the functional converged.
    double tail_bound = 0.0;
};

using SampleFn = std::function<SampleOutcome(std::uint64_t stream_id, RngStream&)>;

struct BatchResult {
    std::vector<double> values;
    std::vector<unsigned char> censored;
    std::vector<double> tail_bounds;
};

BatchResult run_replications_serial(const SampleFn& fn, std::uint64_t seed,
                                    std::size_t n);
BatchResult run_replications_parallel(const SampleFn& fn, std::uint64_t seed,
                                      std::size_t n);

// bias_bound of the report = extra_bias + mean of the per-replicate tail
// bounds (so a batch of fully observed paths reports an exact 0).
EstimateReport summarize(const BatchResult& batch, std::uint64_t seed,
                         double extra_bias, double censor_cap);

// --- Path functionals ----------------------------------------------------

// integral_0^cap e^{-alpha t} f(path state at t) dt, segment-exact for
// piecewise-constant paths, trapezoid on grids; integration always stops at
// the recorded data (death or censor time).  cap may be +inf.
double discounted_path_integral(const Path& p, double alpha, const BoundedFn& f,
                                double cap);
double discounted_concat_integral(const ConcatPath& cp, double alpha,
                                  const BoundedFn& f, double cap);

// --- Estimators ------------------------------------------------------------

// Resolvent functional E_x integral_0^{zeta ^ horizon} e^{-alpha t} f dt.
// Every replicate cut short (horizon censoring, max-revival truncation)
// contributes its own tail bound ||f|| e^{-alpha * cut} / alpha, so
// bias_bound covers the discarded mass exactly where it was discarded.
EstimateReport mc_resolvent(const ProcessSpec& spec, const SpacePoint& start,
                            double alpha, const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, double horizon,
                            const McOptions& opts = {});
EstimateReport mc_resolvent(const ConcatenationPlan& plan, int start_stage,
                            const SpacePoint& start, double alpha,
                            const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts = {});

// Semigroup value E_x f(X_t) with f(Delta) = 0; censored-before-t paths
// contribute 0, are counted in censored_fraction, and add ||f|| apiece to
// the bias bound (the state at t is genuinely unknown for them).
EstimateReport mc_semigroup(const ProcessSpec& spec, const SpacePoint& start,
                            double t, const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts = {});
EstimateReport mc_semigroup(const ConcatenationPlan& plan, int start_stage,
                            const SpacePoint& start, double t,
                            const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts = {});

// Empirical mean lifetime; censored paths contribute their censor time and
// are counted, so a flagged report signals a biased mean.
EstimateReport mc_mean_lifetime(const ProcessSpec& spec, const SpacePoint& start,
                                double horizon, std::size_t n,
                                std::uint64_t seed, const McOptions& opts = {});

// --- Dynkin residual -------------------------------------------------------

// Stop at the n-th revival time, or at the first entry into a region.
struct StopAtRevival {
    int n = 1;
};
struct StopAtRegion {
    std::function<bool(const SpacePoint&)> contains;
    std::string name = "region";
};
using StoppingRule = std::variant<StopAtRevival, StopAtRegion>;

// Continuation value U_alpha f(X_tau): an exact function (oracle resolvent)
// or a nested Monte Carlo estimate from M fresh sub-paths (M >= 10).
struct OracleContinuation {
    std::function<double(const SpacePoint&)> u;
};
struct NestedMcContinuation {
    std::size_t m = 32;
};
using Continuation = std::variant<OracleContinuation, NestedMcContinuation>;

// Per-path residual of the resolvent decomposition at tau:
//   D = integral_0^{zeta} e^{-alpha t} f dt - integral_0^{tau} e^{-alpha t} f dt
//       - e^{-alpha tau} U_alpha f(X_tau) 1_{tau < inf},
// paired on common random numbers (one path feeds all three terms).
// tau = 0 collapses the identity pathwise and contributes an exact 0.
EstimateReport dynkin_residual(const ConcatenationPlan& plan, int start_stage,
                               const SpacePoint& start,
                               const StoppingRule& stopping, double alpha,
                               const BoundedFn& f, std::size_t n,
                               std::uint64_t seed,
                               const Continuation& continuation,
                               const McOptions& opts = {});

// --- Revival formula -------------------------------------------------------

// Gap between E[f(X_{R^n}) G] and E[(K^n f)(exit of stage n) G] for the
// functional G = prod_i g_i(X_{t_i}) 1_{t_k < R^n} 1_{R^n < inf}, both terms
// evaluated on the same path.  Dirac kernels and constant f give an exact 0
// gap on every path.
struct GFunctional {
    std::vector<double> times;     // strictly increasing; may be empty
    std::vector<BoundedFn> funcs;  // same length as times
};

EstimateReport revival_formula_test(const ConcatenationPlan& plan,
                                    int start_stage, const SpacePoint& start,
                                    int n_revival, const BoundedFn& f,
                                    const GFunctional& g, std::size_t n,
                                    std::uint64_t seed,
                                    const McOptions& opts = {});

// --- Post-Widder Laplace inversion ------------------------------------------
//
// The inversion is computed from the scaled derivative sequence
//   s_j = (-1)^j alpha^j phi^(j)(alpha) / j!,   j = 0..k   (s_0 = phi(alpha)),
// the overflow-free carrier of "value and derivatives up to order k": the
// classical approximation (-1)^k/k! alpha^{k+1} phi^(k)(alpha) at alpha = k/t
// is exactly alpha * s_k, with no k! or alpha^{k+1} ever formed.
using ScaledDerivativeOracle =
    std::function<std::vector<double>(double alpha, int order)>;

double post_widder_invert(const ScaledDerivativeOracle& phi, double t, int k);

// Scaled derivatives of phi(alpha) = (resolvent of f at state_index): the
// chain recurrence v_0 = (alpha I - Q)^{-1} f, v_j = alpha (alpha I - Q)^{-1}
// v_{j-1} gives s_j = v_j[state_index] directly.
ScaledDerivativeOracle make_chain_derivative_oracle(const SubGenerator& sg,
                                                    const Eigen::VectorXd& f,
                                                    int state_index);

}  // namespace concatmc
