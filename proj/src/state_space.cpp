#include "concatmc/state_space.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "concatmc/errors.hpp"

namespace concatmc {

bool space_point_less(const SpacePoint& a, const SpacePoint& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    switch (a.kind) {
        case SpacePoint::Kind::Cemetery:
            return false;
        case SpacePoint::Kind::Label:
            return std::tie(a.tag, a.label) < std::tie(b.tag, b.label);
        case SpacePoint::Kind::Real:
            return std::tie(a.tag, a.coord) < std::tie(b.tag, b.coord);
    }
    return false;
}

std::string to_string(const SpacePoint& p) {
    switch (p.kind) {
        case SpacePoint::Kind::Cemetery:
            return "Delta";
        case SpacePoint::Kind::Label:
            return p.tag == 0 ? p.label : std::to_string(p.tag) + ":" + p.label;
        case SpacePoint::Kind::Real: {
            // "x=" keeps the rendering distinct from a label spelling the
            // same digits.
            char buf[40];
            std::snprintf(buf, sizeof(buf), "x=%.17g", p.coord);
            return p.tag == 0 ? std::string(buf)
                              : std::to_string(p.tag) + ":" + std::string(buf);
        }
    }
    return "?";
}

SpacePoint retag(const SpacePoint& p, int new_tag) {
    if (p.is_cemetery()) return p;
    SpacePoint q = p;
    q.tag = new_tag;
    return q;
}

void validate(const StateSpaceDesc& d) {
    if (d.is_finite()) {
        const auto& ls = d.labels().labels;
        if (ls.empty()) throw ConfigError("state space: empty label set");
        std::set<std::string> seen(ls.begin(), ls.end());
        if (seen.size() != ls.size())
            throw ConfigError("state space: duplicate labels");
    } else {
        const auto& iv = d.interval();
        if (!(iv.lo < iv.hi))
            throw ConfigError("state space: interval requires lo < hi");
    }
}

void validate(const TaggedSpace& s) {
    if (s.tag < 1) throw ConfigError("tagged space: tag must be >= 1");
    validate(s.base);
}

bool base_contains(const StateSpaceDesc& d, const SpacePoint& p) {
    if (p.is_cemetery()) return false;
    if (d.is_finite()) {
        if (p.kind != SpacePoint::Kind::Label) return false;
        const auto& ls = d.labels().labels;
        return std::find(ls.begin(), ls.end(), p.label) != ls.end();
    }
    if (p.kind != SpacePoint::Kind::Real) return false;
    const auto& iv = d.interval();
    if (p.coord < iv.lo || p.coord > iv.hi) return false;
    if (p.coord == iv.lo && !iv.closed_lo) return false;
    if (p.coord == iv.hi && !iv.closed_hi) return false;
    return true;
}

bool contains(const TaggedSpace& space, const SpacePoint& p) {
    if (p.is_cemetery() || p.tag != space.tag) return false;
    return base_contains(space.base, p);
}

std::optional<int> union_membership(const std::vector<TaggedSpace>& spaces,
                                    const SpacePoint& p) {
    std::set<int> tags;
    for (const auto& s : spaces) {
        if (!tags.insert(s.tag).second)
            throw ConfigError("union: duplicate tag " + std::to_string(s.tag));
    }
    for (const auto& s : spaces) {
        if (contains(s, p)) return s.tag;
    }
    return std::nullopt;
}

}  // namespace concatmc
