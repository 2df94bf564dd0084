#include "concatmc/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "concatmc/errors.hpp"

namespace concatmc {

namespace {

void validate_row(const KernelRow& row) {
    if (row.empty()) throw ConfigError("kernel: empty row");
    double sum = 0.0;
    for (const auto& [target, w] : row) {
        if (target.is_cemetery())
            throw ConfigError("kernel: cemetery as revival target");
        if (!std::isfinite(w) || w < 0.0)
            throw ConfigError("kernel: weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("kernel: row weights sum to " + std::to_string(sum) +
                          ", expected 1");
}

}  // namespace

KernelSpec make_exit_table(std::vector<std::pair<SpacePoint, KernelRow>> rows) {
    for (auto& [source, row] : rows) {
        (void)source;
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) {
                      return space_point_less(a.first, b.first);
                  });
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return space_point_less(a.first, b.first);
    });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first)
            throw ConfigError("kernel: duplicate row for " +
                              to_string(rows[i].first));
    }
    KernelSpec k{ExitPointTable{std::move(rows)}};
    validate(k);
    return k;
}

void validate(const KernelSpec& k) {
    if (const auto* table = std::get_if<ExitPointTable>(&k.kernel)) {
        if (table->rows.empty()) throw ConfigError("kernel: empty table");
        for (const auto& [source, row] : table->rows) {
            if (source.is_cemetery())
                throw ConfigError("kernel: cemetery as row source");
            validate_row(row);
        }
    } else if (const auto* dirac = std::get_if<DiracKernel>(&k.kernel)) {
        if (dirac->target.is_cemetery())
            throw ConfigError("kernel: Dirac target must be regular");
    }
    // ExitIdentity has no intrinsic structure; target membership is checked
    // at plan validation.
}

KernelRow kernel_row(const KernelSpec& k, const SpacePoint& exit) {
    if (const auto* table = std::get_if<ExitPointTable>(&k.kernel)) {
        for (const auto& [source, row] : table->rows) {
            if (source == exit) return row;
        }
        throw ConfigError("kernel: no row for exit point " + to_string(exit));
    }
    if (const auto* dirac = std::get_if<DiracKernel>(&k.kernel)) {
        return {{dirac->target, 1.0}};
    }
    const auto& ident = std::get<ExitIdentityKernel>(k.kernel);
    if (exit.is_cemetery())
        throw ConfigError("kernel: identity kernel applied to cemetery");
    return {{retag(exit, ident.retarget_tag), 1.0}};
}

SpacePoint sample_revival(const KernelSpec& k, const Path& dying_path,
                          RngStream& rng) {
    const auto exit = exit_point(dying_path);
    if (!exit)
        throw RevivalUndefinedError(
            "sample_revival: dying path has no exit point");
    const KernelRow row = kernel_row(k, *exit);
    if (row.size() == 1) return row.front().first;
    const double u = rng.u01();
    double cum = 0.0;
    for (const auto& [target, w] : row) {
        cum += w;
        if (u < cum) return target;
    }
    return row.back().first;  // u landed in the 1e-12 rounding slack
}

double kernel_expectation(const KernelSpec& k, const SpacePoint& exit,
                          const BoundedFn& f) {
    const KernelRow row = kernel_row(k, exit);
    const double first = f(row.front().first);
    bool all_equal = true;
    for (std::size_t i = 1; i < row.size(); ++i) {
        if (f(row[i].first) != first) {
            all_equal = false;
            break;
        }
    }
    if (all_equal) return first;  // exact: no weight rounding residue
    double sum = 0.0;
    for (const auto& [target, w] : row) sum += w * f(target);
    return sum;
}

bool check_shift_invariance(const RowSelector& select,
                            const std::vector<Path>& paths,
                            const std::vector<double>& r_grid) {
    for (const auto& p : paths) {
        if (std::isinf(p.lifetime)) continue;
        const auto base = select(p);
        for (double r : r_grid) {
            if (!(r >= 0.0) || r >= p.lifetime) continue;
            if (select(shift(p, r)) != base) return false;
        }
    }
    return true;
}

RowSelector selector_of(const KernelSpec& k) {
    return [k](const Path& p) -> std::optional<KernelRow> {
        const auto exit = exit_point(p);
        if (!exit) return std::nullopt;
        return kernel_row(k, *exit);
    };
}

bool check_shift_invariance(const KernelSpec& k, const std::vector<Path>& paths,
                            const std::vector<double>& r_grid) {
    return check_shift_invariance(selector_of(k), paths, r_grid);
}

KernelSpec retarget_kernel(const KernelSpec& k, int new_tag) {
    if (const auto* table = std::get_if<ExitPointTable>(&k.kernel)) {
        ExitPointTable out = *table;
        for (auto& [source, row] : out.rows) {
            (void)source;
            for (auto& [target, w] : row) {
                (void)w;
                target = retag(target, new_tag);
            }
        }
        return KernelSpec{std::move(out)};
    }
    if (const auto* dirac = std::get_if<DiracKernel>(&k.kernel)) {
        return KernelSpec{DiracKernel{retag(dirac->target, new_tag)}};
    }
    return KernelSpec{ExitIdentityKernel{new_tag}};
}

}  // namespace concatmc
