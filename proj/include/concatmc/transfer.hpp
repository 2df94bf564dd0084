#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "concatmc/functions.hpp"
#include "concatmc/path.hpp"
#include "concatmc/rng.hpp"
#include "concatmc/state_space.hpp"

namespace concatmc {

// A finite discrete distribution over target points: the row k(x, .) of a
// transfer kernel.  Weights are >= 0 and sum to 1 within 1e-12.
using KernelRow = std::vector<std::pair<SpacePoint, double>>;

// Kernel variants.  All shipped kernels factor through the exit point
// X_{zeta-} of the dying path; fully path-dependent kernels are admitted by
// the checker interface below but no built-in instance exists.
struct ExitPointTable {
    // Rows keyed by source exit point, kept sorted for determinism.
    std::vector<std::pair<SpacePoint, KernelRow>> rows;
};

struct DiracKernel {
    SpacePoint target;  // regular point; every revival lands here
};

// Maps exit point (n, x) to (retarget_tag, x); the pasting construction's
// tag bookkeeping.  Only valid when x lies in the target base space, which
// is checked at plan validation where the target space is known.
struct ExitIdentityKernel {
    int retarget_tag = 0;
};

struct KernelSpec {
    std::variant<ExitPointTable, DiracKernel, ExitIdentityKernel> kernel;
};

// Build a table kernel with rows and row entries sorted deterministically;
// validates weights.  Throws ConfigError on bad rows.
KernelSpec make_exit_table(std::vector<std::pair<SpacePoint, KernelRow>> rows);

// Structural validation: row sums 1 +- 1e-12, nonnegative weights, regular
// Dirac target.  Throws ConfigError.
void validate(const KernelSpec& k);

// The row selected by an exit point: table lookup (ConfigError when absent),
// the single-target row for Dirac and ExitIdentity.
KernelRow kernel_row(const KernelSpec& k, const SpacePoint& exit);

// Sample the revival point for a dying path.  Throws RevivalUndefinedError
// when the path has no exit point (dead, immortal, censored); ConfigError on
// a missing table row.  Single-target rows return deterministically without
// consuming randomness.
SpacePoint sample_revival(const KernelSpec& k, const Path& dying_path,
                          RngStream& rng);

// Sum_y f(y) k(exit, {y}).  When f is bitwise-constant across the row's
// support the constant is returned directly, so Dirac kernels and constant
// test functions produce exactly f with no rounding residue — several
// "identically zero" invariants rely on this.
double kernel_expectation(const KernelSpec& k, const SpacePoint& exit,
                          const BoundedFn& f);

// Pathwise shift-invariance check: for every path with finite lifetime and
// every r in the grid with r < lifetime, the row selected after shifting must
// equal the row selected by the original path.  Exact comparison: exit points
// are preserved by shifts before death, so built-in kernels always pass.  The
// RowSelector overload admits deliberately path-dependent kernels in tests.
using RowSelector =
    std::function<std::optional<KernelRow>(const Path&)>;

bool check_shift_invariance(const RowSelector& select,
                            const std::vector<Path>& paths,
                            const std::vector<double>& r_grid);
bool check_shift_invariance(const KernelSpec& k, const std::vector<Path>& paths,
                            const std::vector<double>& r_grid);

// The selector induced by a kernel (factors through exit_point).
RowSelector selector_of(const KernelSpec& k);

// Rewrite every target to carry new_tag; used by the alternating-plan
// construction to point copy n's kernel at copy n+1.
KernelSpec retarget_kernel(const KernelSpec& k, int new_tag);

}  // namespace concatmc
