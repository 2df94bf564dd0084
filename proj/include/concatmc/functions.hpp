#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "concatmc/state_space.hpp"

namespace concatmc {

// A bounded test function on the state space, extended by f(Delta) = 0.
// The bound is carried so estimators can report truncation-tail bias bounds.
class BoundedFn {
  public:
    BoundedFn() : fn_([](const SpacePoint&) { return 0.0; }), bound_(0.0) {}
    BoundedFn(std::function<double(const SpacePoint&)> fn, double bound,
              std::string name = "f")
        : fn_(std::move(fn)), bound_(std::abs(bound)), name_(std::move(name)) {}

    // The cemetery convention is enforced here, not left to callers.
    double operator()(const SpacePoint& p) const {
        return p.is_cemetery() ? 0.0 : fn_(p);
    }

    double bound() const { return bound_; }
    const std::string& name() const { return name_; }

    // f == c on every regular point (still 0 at the cemetery).
    static BoundedFn constant(double c) {
        return BoundedFn([c](const SpacePoint&) { return c; }, c,
                         "const(" + std::to_string(c) + ")");
    }

    // Indicator of a single point (exact SpacePoint equality).
    static BoundedFn indicator(const SpacePoint& target) {
        return BoundedFn(
            [target](const SpacePoint& p) { return p == target ? 1.0 : 0.0; },
            1.0, "1_{" + to_string(target) + "}");
    }

    // Piecewise table on labelled points, 0 elsewhere.  Matching ignores the
    // tag when match_any_tag is set (useful for projected processes).
    static BoundedFn label_table(std::vector<std::pair<std::string, double>> table,
                                 bool match_any_tag = false, int tag = 0) {
        double b = 0.0;
        for (const auto& [_, v] : table) b = std::max(b, std::abs(v));
        return BoundedFn(
            [table = std::move(table), match_any_tag, tag](const SpacePoint& p) {
                if (p.kind != SpacePoint::Kind::Label) return 0.0;
                if (!match_any_tag && p.tag != tag) return 0.0;
                for (const auto& [lbl, v] : table)
                    if (lbl == p.label) return v;
                return 0.0;
            },
            b, "table");
    }

  private:
    std::function<double(const SpacePoint&)> fn_;
    double bound_ = 0.0;
    std::string name_ = "f";
};

}  // namespace concatmc
