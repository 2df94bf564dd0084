#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "concatmc/concat.hpp"
#include "concatmc/process.hpp"
#include "concatmc/transfer.hpp"

namespace concatmc {

// Dense subgenerator over an ordered finite state set: nonnegative
// off-diagonals, row sums <= 0, with the deficit -(row sum) acting as the
// kill rate.  The exact ground truth for every statistical test on chains.
struct SubGenerator {
    std::vector<std::string> states;  // display keys, "tag:label"
    Eigen::MatrixXd matrix;

    int size() const { return static_cast<int>(states.size()); }
    int index_of(const std::string& state) const;
    double kill_rate(int i) const { return -matrix.row(i).sum(); }
};

// Structural check: square, off-diagonals >= 0, row sums <= 1e-12 slack.
// Throws ConfigError.
void validate(const SubGenerator& sg);

// The subgenerator Q - diag(rowsum Q) - diag(c) of a finite chain, states
// keyed "tag:label".
SubGenerator from_chain(const FiniteChainSpec& chain);

// Solve (alpha I - Q) u = f by dense LU; postcondition enforced:
// ||(alpha I - Q) u - f||_inf <= 1e-12 ||f||_inf.  Throws NumericError on
// alpha <= 0 or a failed solve.
Eigen::VectorXd exact_resolvent(const SubGenerator& sg, double alpha,
                                const Eigen::VectorXd& f);

// e^{tQ} f by uniformization (nonnegativity-preserving), relative error
// <= 1e-10; long horizons are split into moderate steps.  t >= 0.
Eigen::VectorXd exact_semigroup(const SubGenerator& sg, double t,
                                const Eigen::VectorXd& f);

// Block generator of the concatenation truncated to n_stages stages:
// diagonal blocks are the stage subgenerators, block n -> n+1 routes the
// kill mass diag(c^n) through kernel n's rows, and the final stage keeps its
// deficit.  All stages must be finite chains with discrete kernels; throws
// UnsupportedError otherwise.
SubGenerator assemble_concatenated(const ConcatenationPlan& plan, int n_stages);

// Q' = Q_sub + diag(c) K for a kernel over the same label set: the generator
// of the instant-revival (projected identical-iterations) process.  Kernel
// target tags are ignored; matching is by label.
SubGenerator assemble_instant_revival(const FiniteChainSpec& chain,
                                      const KernelSpec& kernel);

// The three summands of the resolvent decomposition at the first entry time
// tau of the set A (absorbing-boundary solves on the complement I of A):
//   integral_part(x) = E_x  integral_0^tau e^{-alpha t} f(X_t) dt
//   boundary_part(x) = E_x( e^{-alpha tau} g(X_tau) ; tau < zeta )
//   kill_part(x)     = E_x( e^{-alpha zeta} g(X_{zeta-}) ; zeta < tau )
// One vector g carries both payoffs on disjoint domains: its entries on A
// are the entry payoff, its entries on I are the kill payoff (typically the
// kernel-averaged (Kg)(x)).  Results are indexed by `interior`.
struct EntryFunctionals {
    std::vector<int> interior;  // indices into sg.states
    Eigen::VectorXd integral_part;
    Eigen::VectorXd boundary_part;
    Eigen::VectorXd kill_part;
};

EntryFunctionals exact_entry_functionals(const SubGenerator& sg, double alpha,
                                         const std::vector<int>& absorbing,
                                         const Eigen::VectorXd& f,
                                         const Eigen::VectorXd& g);

}  // namespace concatmc
