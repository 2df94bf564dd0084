#include "concatmc/path.hpp"

#include <algorithm>
#include <cmath>

#include "concatmc/errors.hpp"

namespace concatmc {

SpacePoint evaluate(const Path& p, double t) {
    if (t < 0.0) throw DomainError("evaluate: negative time");
    if (p.censored && t >= p.censor_time)
        throw UndefinedRegionError("evaluate: censored region");
    if (t >= p.lifetime) return SpacePoint::cemetery();
    // Last event with time <= t; events are sorted and start at 0.
    auto it = std::upper_bound(
        p.events.begin(), p.events.end(), t,
        [](double v, const PathEvent& e) { return v < e.time; });
    if (it == p.events.begin()) return SpacePoint::cemetery();  // unreachable for valid paths
    return std::prev(it)->state;
}

Path shift(const Path& p, double r) {
    if (r < 0.0) throw DomainError("shift: negative r");
    if (r == 0.0) return p;
    if (r >= p.lifetime) return Path::dead();  // includes the dead path itself
    Path q;
    q.representation = p.representation;
    q.dt = p.dt;
    // The exact form (zeta - r) with the max guard; r < lifetime < inf here
    // is impossible for censored paths (lifetime inf), handled below.
    q.lifetime = std::max(p.lifetime - r, 0.0);
    if (p.censored) {
        if (r >= p.censor_time) {
            // Entire shifted trajectory lies in the unknown region.
            q.censored = true;
            q.censor_time = 0.0;
            q.lifetime = kInf;
            return q;
        }
        q.censored = true;
        q.censor_time = p.censor_time - r;
    }
    // State held at r becomes the new time-0 event.
    auto it = std::upper_bound(
        p.events.begin(), p.events.end(), r,
        [](double v, const PathEvent& e) { return v < e.time; });
    if (it != p.events.begin()) {
        q.events.push_back({0.0, std::prev(it)->state});
    }
    for (; it != p.events.end(); ++it) {
        q.events.push_back({it->time - r, it->state});
    }
    q.recorded_exit = p.recorded_exit;
    return q;
}

std::optional<SpacePoint> exit_point(const Path& p) {
    if (p.censored || p.is_dead() || std::isinf(p.lifetime)) return std::nullopt;
    if (p.recorded_exit) return p.recorded_exit;
    if (p.events.empty()) return std::nullopt;
    return p.events.back().state;
}

void validate(const Path& p) {
    if (p.lifetime < 0.0) throw DomainError("path: negative lifetime");
    if (p.is_dead()) return;
    if (p.censored && p.censor_time <= 0.0 && p.events.empty())
        return;  // fully-unknown trajectory: a censored path shifted past its data
    if (p.events.empty())
        throw DomainError("path: positive lifetime with no events");
    double prev = -1.0;
    for (const auto& e : p.events) {
        if (e.state.is_cemetery())
            throw DomainError("path: cemetery recorded as event state");
        if (e.time <= prev) throw DomainError("path: event times not increasing");
        prev = e.time;
    }
    if (p.events.front().time != 0.0)
        throw DomainError("path: first event not at time 0");
    if (p.events.back().time >= p.lifetime)
        throw DomainError("path: event at or past lifetime");
    if (p.censored && !std::isinf(p.lifetime))
        throw DomainError("path: censored path must have unknown (inf) lifetime");
}

}  // namespace concatmc
