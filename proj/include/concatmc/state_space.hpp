#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace concatmc {

// A point of the disjoint union E_Delta = {Delta} ∪ ⋃_n {n} × E^n.
//
// tag = 0 is reserved for untagged points: elements of a plain base space, or
// of the projected union obtained by erasing tags.  Tagged copies use n >= 1.
// The cemetery carries no tag and no value and equals only itself.
struct SpacePoint {
    enum class Kind { Cemetery, Label, Real };

    Kind kind = Kind::Cemetery;
    int tag = 0;
    std::string label;   // meaningful iff kind == Label
    double coord = 0.0;  // meaningful iff kind == Real

    static SpacePoint cemetery() { return SpacePoint{}; }
    static SpacePoint label_point(int tag, std::string name) {
        SpacePoint p;
        p.kind = Kind::Label;
        p.tag = tag;
        p.label = std::move(name);
        return p;
    }
    static SpacePoint real_point(int tag, double x) {
        SpacePoint p;
        p.kind = Kind::Real;
        p.tag = tag;
        p.coord = x;
        return p;
    }

    bool is_cemetery() const { return kind == Kind::Cemetery; }

    // Exact equality: tags and values must match bitwise; real coordinates
    // compare with ==, deliberately, so membership semantics are deterministic.
    friend bool operator==(const SpacePoint& a, const SpacePoint& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
            case Kind::Cemetery: return true;
            case Kind::Label: return a.tag == b.tag && a.label == b.label;
            case Kind::Real: return a.tag == b.tag && a.coord == b.coord;
        }
        return false;
    }
};

// Total order for use as a deterministic map key (cemetery first, then by
// kind, tag, value).
bool space_point_less(const SpacePoint& a, const SpacePoint& b);

std::string to_string(const SpacePoint& p);

// Tag replacement; retag(p, 0) is the projection that erases the copy index.
// The cemetery is fixed by every retagging.
SpacePoint retag(const SpacePoint& p, int new_tag);

// Base space descriptors.
struct FiniteLabels {
    std::vector<std::string> labels;
};

struct RealInterval {
    double lo = 0.0;
    double hi = 1.0;
    bool closed_lo = true;
    bool closed_hi = true;
};

struct StateSpaceDesc {
    std::variant<FiniteLabels, RealInterval> base;

    bool is_finite() const { return std::holds_alternative<FiniteLabels>(base); }
    const FiniteLabels& labels() const { return std::get<FiniteLabels>(base); }
    const RealInterval& interval() const { return std::get<RealInterval>(base); }
};

// The n-th copy {n} × base.  Distinct tags make copies disjoint even when the
// bases coincide.
struct TaggedSpace {
    int tag = 1;
    StateSpaceDesc base;
};

// Throw ConfigError on structurally invalid descriptors (empty or duplicate
// labels, lo >= hi, tag < 1).  Called at every configuration boundary.
void validate(const StateSpaceDesc& d);
void validate(const TaggedSpace& s);

// Membership of an untagged value in the base space.  Interval endpoints
// count according to the closed-end flags; label membership is exact.
bool base_contains(const StateSpaceDesc& d, const SpacePoint& p);

// true iff p is a regular point, tags match, and the value lies in the base.
// The cemetery is contained in no space.
bool contains(const TaggedSpace& space, const SpacePoint& p);

// The tag of the unique space containing p, or nothing (cemetery and
// unmatched points).  Throws ConfigError when two spaces share a tag.
std::optional<int> union_membership(const std::vector<TaggedSpace>& spaces,
                                    const SpacePoint& p);

}  // namespace concatmc
