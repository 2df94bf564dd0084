#include "concatmc/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "concatmc/errors.hpp"

namespace concatmc {

namespace {

std::string state_key(int tag, const std::string& label) {
    return std::to_string(tag) + ":" + label;
}

void check_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& rhs, const char* what) {
    const double scale = std::max(rhs.lpNorm<Eigen::Infinity>(), 1.0);
    const double res = (A * u - rhs).lpNorm<Eigen::Infinity>();
    if (!(res <= 1e-12 * scale))
        throw NumericError(std::string(what) + ": solve residual " +
                           std::to_string(res) + " exceeds tolerance");
}

Eigen::VectorXd solve_resolvent_system(const Eigen::MatrixXd& Q, double alpha,
                                       const Eigen::VectorXd& rhs,
                                       const char* what) {
    if (!(alpha > 0.0))
        throw NumericError(std::string(what) + ": alpha must be > 0");
    const Eigen::MatrixXd A =
        alpha * Eigen::MatrixXd::Identity(Q.rows(), Q.cols()) - Q;
    const Eigen::VectorXd u = A.partialPivLu().solve(rhs);
    if (!u.allFinite())
        throw NumericError(std::string(what) + ": singular system");
    check_residual(A, u, rhs, what);
    return u;
}

}  // namespace

int SubGenerator::index_of(const std::string& state) const {
    auto it = std::find(states.begin(), states.end(), state);
    return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

void validate(const SubGenerator& sg) {
    const int n = sg.size();
    if (sg.matrix.rows() != n || sg.matrix.cols() != n)
        throw ConfigError("subgenerator: matrix shape does not match states");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && sg.matrix(i, j) < 0.0)
                throw ConfigError("subgenerator: negative off-diagonal");
            if (!std::isfinite(sg.matrix(i, j)))
                throw ConfigError("subgenerator: non-finite entry");
        }
        if (sg.matrix.row(i).sum() > 1e-12)
            throw ConfigError("subgenerator: positive row sum (negative kill rate)");
    }
}

SubGenerator from_chain(const FiniteChainSpec& chain) {
    const int n = chain.size();
    SubGenerator sg;
    sg.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        sg.states.push_back(state_key(chain.space.tag,
                                      chain.space.base.labels().labels[static_cast<std::size_t>(i)]));
        double out = chain.kill[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = chain.rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            sg.matrix(i, j) = q;
            out += q;
        }
        sg.matrix(i, i) = -out;
    }
    return sg;
}

Eigen::VectorXd exact_resolvent(const SubGenerator& sg, double alpha,
                                const Eigen::VectorXd& f) {
    if (f.size() != sg.size())
        throw ConfigError("exact_resolvent: f dimension mismatch");
    return solve_resolvent_system(sg.matrix, alpha, f, "exact_resolvent");
}

Eigen::VectorXd exact_semigroup(const SubGenerator& sg, double t,
                                const Eigen::VectorXd& f) {
    if (t < 0.0) throw DomainError("exact_semigroup: t must be >= 0");
    if (f.size() != sg.size())
        throw ConfigError("exact_semigroup: f dimension mismatch");
    if (t == 0.0) return f;
    const double lam = std::max(sg.matrix.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    // Keep lam*step moderate so the Poisson weights neither underflow nor
    // need thousands of terms; apply the step repeatedly.
    const int chunks = std::max(1, static_cast<int>(std::ceil(lam * t / 64.0)));
    const double step = t / chunks;
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(sg.size(), sg.size()) + sg.matrix / lam;
    const double a = lam * step;
    Eigen::VectorXd v = f;
    for (int c = 0; c < chunks; ++c) {
        Eigen::VectorXd term = v;  // P^0 v
        Eigen::VectorXd acc = std::exp(-a) * term;
        double w = std::exp(-a);  // Poisson(a) weight at k
        double wsum = w;
        for (int k = 1; wsum < 1.0 - 1e-13 || k <= static_cast<int>(a); ++k) {
            term = P * term;
            w *= a / static_cast<double>(k);
            acc += w * term;
            wsum += w;
            if (k > 100000)
                throw NumericError("exact_semigroup: uniformization failed to converge");
        }
        v = acc;
    }
    return v;
}

SubGenerator assemble_concatenated(const ConcatenationPlan& plan, int n_stages) {
    if (n_stages < 1)
        throw ConfigError("assemble_concatenated: need at least one stage");
    std::vector<FiniteChainSpec> chains;
    std::vector<std::optional<KernelSpec>> kernels;
    for (int n = 1; n <= n_stages; ++n) {
        Stage st = plan.stage(n);
        const auto* c = std::get_if<FiniteChainSpec>(&st.process);
        if (!c)
            throw UnsupportedError(
                "assemble_concatenated: stage " + std::to_string(n) +
                " is not a finite chain");
        chains.push_back(*c);
        kernels.push_back(st.kernel);
    }

    SubGenerator sg;
    std::vector<int> offsets;
    for (const auto& c : chains) {
        offsets.push_back(sg.size());
        for (const auto& lbl : c.space.base.labels().labels)
            sg.states.push_back(state_key(c.space.tag, lbl));
    }
    const int total = sg.size();
    sg.matrix = Eigen::MatrixXd::Zero(total, total);

    for (std::size_t s = 0; s < chains.size(); ++s) {
        const SubGenerator block = from_chain(chains[s]);
        const int off = offsets[s];
        sg.matrix.block(off, off, block.size(), block.size()) = block.matrix;
        if (s + 1 >= chains.size() || !kernels[s]) continue;  // deficit kept
        // Route the kill mass of stage s through its kernel rows.
        for (int i = 0; i < chains[s].size(); ++i) {
            const double c = chains[s].kill[static_cast<std::size_t>(i)];
            if (c == 0.0) continue;
            const KernelRow row = kernel_row(*kernels[s], chains[s].point(i));
            for (const auto& [target, w] : row) {
                const int j = sg.index_of(state_key(target.tag, target.label));
                if (j < 0)
                    throw ConfigError(
                        "assemble_concatenated: kernel target " +
                        to_string(target) + " not among assembled states");
                sg.matrix(off + i, j) += c * w;
            }
        }
    }
    validate(sg);
    return sg;
}

SubGenerator assemble_instant_revival(const FiniteChainSpec& chain,
                                      const KernelSpec& kernel) {
    SubGenerator sg = from_chain(chain);
    for (int i = 0; i < chain.size(); ++i) {
        const double c = chain.kill[static_cast<std::size_t>(i)];
        if (c == 0.0) continue;
        const KernelRow row = kernel_row(kernel, chain.point(i));
        for (const auto& [target, w] : row) {
            const int j = chain.index_of(target.label);  // tag-insensitive
            if (j < 0)
                throw ConfigError("assemble_instant_revival: kernel target " +
                                  to_string(target) + " outside the chain");
            sg.matrix(i, j) += c * w;
        }
    }
    return sg;
}

EntryFunctionals exact_entry_functionals(const SubGenerator& sg, double alpha,
                                         const std::vector<int>& absorbing,
                                         const Eigen::VectorXd& f,
                                         const Eigen::VectorXd& g) {
    const int n = sg.size();
    if (f.size() != n || g.size() != n)
        throw ConfigError("exact_entry_functionals: vector dimension mismatch");
    std::vector<bool> in_a(static_cast<std::size_t>(n), false);
    for (int a : absorbing) {
        if (a < 0 || a >= n)
            throw ConfigError("exact_entry_functionals: bad absorbing index");
        in_a[static_cast<std::size_t>(a)] = true;
    }
    EntryFunctionals out;
    for (int i = 0; i < n; ++i)
        if (!in_a[static_cast<std::size_t>(i)]) out.interior.push_back(i);
    if (out.interior.empty())
        throw DomainError("exact_entry_functionals: A covers the whole space");

    const int m = static_cast<int>(out.interior.size());
    Eigen::MatrixXd qii(m, m);
    Eigen::VectorXd f_i(m), boundary_rhs(m), kill_rhs(m);
    for (int r = 0; r < m; ++r) {
        const int i = out.interior[static_cast<std::size_t>(r)];
        for (int c = 0; c < m; ++c)
            qii(r, c) = sg.matrix(i, out.interior[static_cast<std::size_t>(c)]);
        f_i(r) = f(i);
        // Jumps into A carry the entry payoff g|_A.
        double br = 0.0;
        for (int a : absorbing) br += sg.matrix(i, a) * g(a);
        boundary_rhs(r) = br;
        // The kill deficit carries the kill payoff g|_I at the dying state.
        kill_rhs(r) = sg.kill_rate(i) * g(i);
    }
    out.integral_part =
        solve_resolvent_system(qii, alpha, f_i, "entry integral_part");
    out.boundary_part =
        solve_resolvent_system(qii, alpha, boundary_rhs, "entry boundary_part");
    out.kill_part = solve_resolvent_system(qii, alpha, kill_rhs, "entry kill_part");
    return out;
}

}  // namespace concatmc
