#include "concatmc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "concatmc/errors.hpp"

namespace concatmc {

namespace {

constexpr std::uint64_t kNestedSalt = 0x6a09e667f3bcc909ULL;

// exp(-alpha*a) - exp(-alpha*b) for 0 <= a <= b, stable for tiny intervals
// and correct for b = inf.
double exp_diff(double alpha, double a, double b) {
    return -std::exp(-alpha * a) * std::expm1(-alpha * (b - a));
}

double path_data_end(const Path& p) {
    return p.censored ? p.censor_time : p.lifetime;
}

}  // namespace

BatchResult run_replications_serial(const SampleFn& fn, std::uint64_t seed,
                                    std::size_t n) {
    BatchResult out;
    out.values.resize(n);
    out.censored.assign(n, 0);
    out.tail_bounds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        const SampleOutcome s = fn(i, rng);
        out.values[i] = s.value;
        out.censored[i] = s.censored ? 1 : 0;
        out.tail_bounds[i] = s.tail_bound;
    }
    return out;
}

BatchResult run_replications_parallel(const SampleFn& fn, std::uint64_t seed,
                                      std::size_t n) {
    BatchResult out;
    out.values.resize(n);
    out.censored.assign(n, 0);
    out.tail_bounds.resize(n);
    std::exception_ptr error;
    const long ln = static_cast<long>(n);
    // Replicate i's result depends only on (seed, i): the schedule cannot
    // change any value, and the reduction happens later, in index order.
#pragma omp parallel for schedule(static)
    for (long li = 0; li < ln; ++li) {
        try {
            const std::size_t i = static_cast<std::size_t>(li);
            RngStream rng(seed, i);
            const SampleOutcome s = fn(i, rng);
            out.values[i] = s.value;
            out.censored[i] = s.censored ? 1 : 0;
            out.tail_bounds[i] = s.tail_bound;
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

EstimateReport summarize(const BatchResult& batch, std::uint64_t seed,
                         double extra_bias, double censor_cap) {
    const std::size_t n = batch.values.size();
    EstimateReport r;
    r.n_samples = n;
    r.seed = seed;
    r.bias_bound = extra_bias;
    if (n == 0) return r;
    r.bias_bound =
        extra_bias + neumaier_total(batch.tail_bounds) / static_cast<double>(n);
    r.value = neumaier_total(batch.values) / static_cast<double>(n);
    if (n >= 2) {
        NeumaierSum ss;
        for (double v : batch.values) {
            const double d = v - r.value;
            ss.add(d * d);
        }
        r.std_err =
            std::sqrt(ss.value() / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    std::size_t c = 0;
    for (unsigned char b : batch.censored) c += b;
    r.censored_fraction = static_cast<double>(c) / static_cast<double>(n);
    r.flagged = r.censored_fraction > censor_cap;
    return r;
}

namespace {

BatchResult run_batch(const SampleFn& fn, std::uint64_t seed, std::size_t n,
                      const McOptions& opts) {
    return opts.parallel ? run_replications_parallel(fn, seed, n)
                         : run_replications_serial(fn, seed, n);
}

}  // namespace

double discounted_path_integral(const Path& p, double alpha, const BoundedFn& f,
                                double cap) {
    if (!(alpha > 0.0))
        throw DomainError("discounted integral: alpha must be > 0");
    const double end = std::min(path_data_end(p), cap);
    if (!(end > 0.0) || p.events.empty()) return 0.0;
    NeumaierSum acc;
    if (p.representation == Path::Representation::PiecewiseConstant) {
        for (std::size_t i = 0; i < p.events.size(); ++i) {
            const double t0 = p.events[i].time;
            if (t0 >= end) break;
            const double t1 =
                i + 1 < p.events.size() ? std::min(p.events[i + 1].time, end) : end;
            const double fv = f(p.events[i].state);
            if (fv != 0.0) acc.add(fv * exp_diff(alpha, t0, t1) / alpha);
        }
        return acc.value();
    }
    // Grid: trapezoid across recorded nodes, then the final partial cell up
    // to the death/censor/cap boundary.
    double t_prev = p.events[0].time;
    double h_prev = std::exp(-alpha * t_prev) * f(p.events[0].state);
    for (std::size_t i = 1; i < p.events.size() && p.events[i].time <= end; ++i) {
        const double t = p.events[i].time;
        const double h = std::exp(-alpha * t) * f(p.events[i].state);
        acc.add(0.5 * (h_prev + h) * (t - t_prev));
        t_prev = t;
        h_prev = h;
    }
    if (end > t_prev && std::isfinite(end)) {
        const SpacePoint boundary =
            p.recorded_exit ? *p.recorded_exit : p.events.back().state;
        const double h_end = std::exp(-alpha * end) * f(boundary);
        acc.add(0.5 * (h_prev + h_end) * (end - t_prev));
    }
    return acc.value();
}

namespace {

// Bound on the resolvent mass a truncated composite never observed: censored
// composites lose at most the discounted tail past the censor time, and a
// max-revival cut loses at most the tail past the final (fiat) death.  Paths
// that genuinely died or converged contribute an exact 0.
double concat_tail_bound(const ConcatPath& cp, double alpha,
                         const BoundedFn& f) {
    if (cp.censored)
        return f.bound() * std::exp(-alpha * cp.censor_time) / alpha;
    if (cp.terminal == TerminalReason::MaxRevivals)
        return f.bound() * std::exp(-alpha * cp.total_lifetime()) / alpha;
    return 0.0;
}

}  // namespace

double discounted_concat_integral(const ConcatPath& cp, double alpha,
                                  const BoundedFn& f, double cap) {
    const double data_end = cp.censored
                                ? std::min(cp.censor_time, cp.total_lifetime())
                                : cp.total_lifetime();
    const double end = std::min(data_end, cap);
    if (!(end > 0.0)) return 0.0;
    NeumaierSum acc;
    double before = 0.0;
    for (std::size_t k = 0; k < cp.segments.size(); ++k) {
        if (before >= end) break;
        const double discount = std::exp(-alpha * before);
        if (discount == 0.0) break;
        acc.add(discount * discounted_path_integral(cp.segments[k].path, alpha, f,
                                                    end - before));
        before = cp.cumulative_lifetimes[k];
    }
    return acc.value();
}

EstimateReport mc_resolvent(const ProcessSpec& spec, const SpacePoint& start,
                            double alpha, const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, double horizon,
                            const McOptions& opts) {
    if (!(alpha > 0.0)) throw DomainError("mc_resolvent: alpha must be > 0");
    if (n < 2) throw ConfigError("mc_resolvent: need at least 2 samples");
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        const Path p = sample_path(spec, start, horizon, rng);
        const double tail =
            p.censored ? f.bound() * std::exp(-alpha * p.censor_time) / alpha
                       : 0.0;
        return SampleOutcome{discounted_path_integral(p, alpha, f, kInf),
                             p.censored, tail};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

EstimateReport mc_resolvent(const ConcatenationPlan& plan, int start_stage,
                            const SpacePoint& start, double alpha,
                            const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts) {
    if (!(alpha > 0.0)) throw DomainError("mc_resolvent: alpha must be > 0");
    if (n < 2) throw ConfigError("mc_resolvent: need at least 2 samples");
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        const ConcatPath cp = sample_concatenated(plan, start_stage, start, rng);
        return SampleOutcome{discounted_concat_integral(cp, alpha, f, kInf),
                             cp.censored, concat_tail_bound(cp, alpha, f)};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

EstimateReport mc_semigroup(const ProcessSpec& spec, const SpacePoint& start,
                            double t, const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts) {
    if (t < 0.0) throw DomainError("mc_semigroup: t must be >= 0");
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        // Horizon t + 1 guarantees any censoring happens strictly after t.
        const Path p = sample_path(spec, start, t + 1.0, rng);
        if (p.censored && t >= p.censor_time)
            return SampleOutcome{0.0, true, f.bound()};
        return SampleOutcome{f(evaluate(p, t)), false, 0.0};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

EstimateReport mc_semigroup(const ConcatenationPlan& plan, int start_stage,
                            const SpacePoint& start, double t,
                            const BoundedFn& f, std::size_t n,
                            std::uint64_t seed, const McOptions& opts) {
    if (t < 0.0) throw DomainError("mc_semigroup: t must be >= 0");
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        const ConcatPath cp = sample_concatenated(plan, start_stage, start, rng);
        if (cp.censored && t >= cp.censor_time)
            return SampleOutcome{0.0, true, f.bound()};
        // A max-revival cut before t reports the cemetery, but the untruncated
        // process would be alive somewhere with |f| up to its bound.
        const double tail = (cp.terminal == TerminalReason::MaxRevivals &&
                             t >= cp.total_lifetime())
                                ? f.bound()
                                : 0.0;
        return SampleOutcome{f(evaluate_concat(cp, t)), false, tail};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

EstimateReport mc_mean_lifetime(const ProcessSpec& spec, const SpacePoint& start,
                                double horizon, std::size_t n,
                                std::uint64_t seed, const McOptions& opts) {
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        const Path p = sample_path(spec, start, horizon, rng);
        if (p.censored) return SampleOutcome{p.censor_time, true};
        return SampleOutcome{p.lifetime, false};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

namespace {

// First global time the composite's recorded trajectory sits in the region;
// exact for piecewise-constant segments (entries happen at event times).
double first_entry_concat(const ConcatPath& cp,
                          const std::function<bool(const SpacePoint&)>& region) {
    double before = 0.0;
    for (std::size_t k = 0; k < cp.segments.size(); ++k) {
        for (const auto& e : cp.segments[k].path.events) {
            if (region(e.state)) return before + e.time;
        }
        before = cp.cumulative_lifetimes[k];
    }
    return kInf;
}

int stage_of_point(const ConcatenationPlan& plan, const SpacePoint& p) {
    const int known = static_cast<int>(plan.stages.size());
    for (int s = 1; s <= known; ++s) {
        if (contains(space_of(plan.stages[static_cast<std::size_t>(s - 1)].process), p))
            return s;
    }
    // Generated stages follow the convention stage index == tag.
    if (plan.stage_rule && p.tag > known &&
        contains(space_of(plan.stage(p.tag).process), p))
        return p.tag;
    throw DomainError("no stage contains " + to_string(p));
}

}  // namespace

EstimateReport dynkin_residual(const ConcatenationPlan& plan, int start_stage,
                               const SpacePoint& start,
                               const StoppingRule& stopping, double alpha,
                               const BoundedFn& f, std::size_t n,
                               std::uint64_t seed,
                               const Continuation& continuation,
                               const McOptions& opts) {
    if (!(alpha > 0.0)) throw DomainError("dynkin_residual: alpha must be > 0");
    if (const auto* nested = std::get_if<NestedMcContinuation>(&continuation)) {
        if (nested->m < 10)
            throw ConfigError("dynkin_residual: nested MC needs M >= 10");
    }
    const SampleFn fn = [&](std::uint64_t i, RngStream& rng) {
        const ConcatPath cp = sample_concatenated(plan, start_stage, start, rng);
        double tau;
        if (const auto* rev = std::get_if<StopAtRevival>(&stopping)) {
            tau = revival_time(cp, rev->n);
        } else {
            tau = first_entry_concat(cp, std::get<StopAtRegion>(stopping).contains);
        }
        if (tau == 0.0) return SampleOutcome{0.0, cp.censored, 0.0};  // collapses exactly
        const double full = discounted_concat_integral(cp, alpha, f, kInf);
        const double upto = discounted_concat_integral(cp, alpha, f, tau);
        // Each of the three terms can miss at most the discounted tail past
        // the data end of the (possibly truncated) composite.
        double tail = 3.0 * concat_tail_bound(cp, alpha, f);
        double cont = 0.0;
        if (std::isfinite(tau)) {
            const SpacePoint x_tau = evaluate_concat(cp, tau);
            double u;
            if (const auto* oracle = std::get_if<OracleContinuation>(&continuation)) {
                u = oracle->u(x_tau);
            } else {
                const auto& nested = std::get<NestedMcContinuation>(continuation);
                const int stage = stage_of_point(plan, x_tau);
                NeumaierSum sub;
                NeumaierSum sub_tail;
                for (std::size_t j = 0; j < nested.m; ++j) {
                    RngStream sub_rng(seed ^ kNestedSalt, i * nested.m + j);
                    const ConcatPath sub_cp =
                        sample_concatenated(plan, stage, x_tau, sub_rng);
                    sub.add(discounted_concat_integral(sub_cp, alpha, f, kInf));
                    sub_tail.add(concat_tail_bound(sub_cp, alpha, f));
                }
                u = sub.value() / static_cast<double>(nested.m);
                tail += std::exp(-alpha * tau) * sub_tail.value() /
                        static_cast<double>(nested.m);
            }
            cont = std::exp(-alpha * tau) * u;
        }
        return SampleOutcome{full - upto - cont, cp.censored, tail};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

EstimateReport revival_formula_test(const ConcatenationPlan& plan,
                                    int start_stage, const SpacePoint& start,
                                    int n_revival, const BoundedFn& f,
                                    const GFunctional& g, std::size_t n,
                                    std::uint64_t seed, const McOptions& opts) {
    if (n_revival < 1)
        throw ConfigError("revival_formula_test: revival index must be >= 1");
    if (n_revival > plan.truncation.max_revivals)
        throw ConfigError(
            "revival_formula_test: tested revival is beyond the truncation cap");
    if (g.times.size() != g.funcs.size())
        throw ConfigError("revival_formula_test: times/functions mismatch");
    for (std::size_t i = 1; i < g.times.size(); ++i) {
        if (!(g.times[i - 1] < g.times[i]))
            throw ConfigError("revival_formula_test: times must increase");
    }
    const SampleFn fn = [&](std::uint64_t, RngStream& rng) {
        const ConcatPath cp = sample_concatenated(plan, start_stage, start, rng);
        const double r = revival_time(cp, n_revival);
        if (!std::isfinite(r)) return SampleOutcome{0.0, cp.censored};
        if (!g.times.empty() && !(g.times.back() < r))
            return SampleOutcome{0.0, cp.censored};
        double gprod = 1.0;
        for (std::size_t i = 0; i < g.times.size(); ++i)
            gprod *= g.funcs[i](evaluate_concat(cp, g.times[i]));
        // Both terms ride the same path: the gap is a paired difference.
        const double lhs = f(evaluate_concat(cp, r)) * gprod;
        const auto& seg = cp.segments[static_cast<std::size_t>(n_revival - 1)];
        const Stage st = plan.stage(seg.stage_index);
        const auto exit = exit_point(seg.path);
        if (!st.kernel || !exit)
            throw NumericError("revival_formula_test: revival without kernel/exit");
        const double rhs = kernel_expectation(*st.kernel, *exit, f) * gprod;
        return SampleOutcome{lhs - rhs, cp.censored};
    };
    return summarize(run_batch(fn, seed, n, opts), seed, 0.0, opts.censor_cap);
}

double post_widder_invert(const ScaledDerivativeOracle& phi, double t, int k) {
    if (!(t > 0.0)) throw DomainError("post_widder_invert: t must be > 0");
    if (k < 1) throw DomainError("post_widder_invert: k must be >= 1");
    const double alpha = static_cast<double>(k) / t;
    const std::vector<double> s = phi(alpha, k);
    if (s.size() != static_cast<std::size_t>(k) + 1)
        throw NumericError("post_widder_invert: oracle returned wrong order");
    return alpha * s.back();
}

ScaledDerivativeOracle make_chain_derivative_oracle(const SubGenerator& sg,
                                                    const Eigen::VectorXd& f,
                                                    int state_index) {
    if (state_index < 0 || state_index >= sg.size())
        throw ConfigError("derivative oracle: bad state index");
    return [sg, f, state_index](double alpha, int order) {
        if (!(alpha > 0.0))
            throw NumericError("derivative oracle: alpha must be > 0");
        const Eigen::MatrixXd A =
            alpha * Eigen::MatrixXd::Identity(sg.size(), sg.size()) - sg.matrix;
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        std::vector<double> s;
        Eigen::VectorXd v = lu.solve(f);
        s.push_back(v(state_index));
        for (int j = 1; j <= order; ++j) {
            v = alpha * lu.solve(v).eval();
            s.push_back(v(state_index));
        }
        return s;
    };
}

}  // namespace concatmc
