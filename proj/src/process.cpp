#include "concatmc/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "concatmc/errors.hpp"

namespace concatmc {

int FiniteChainSpec::index_of(const std::string& label) const {
    const auto& ls = space.base.labels().labels;
    auto it = std::find(ls.begin(), ls.end(), label);
    return it == ls.end() ? -1 : static_cast<int>(it - ls.begin());
}

SpacePoint FiniteChainSpec::point(int i) const {
    return SpacePoint::label_point(space.tag, space.base.labels().labels.at(i));
}

const TaggedSpace& space_of(const ProcessSpec& spec) {
    return std::visit([](const auto& s) -> const TaggedSpace& { return s.space; },
                      spec);
}

namespace {

void validate_chain(const FiniteChainSpec& c) {
    validate(c.space);
    if (!c.space.base.is_finite())
        throw ConfigError("chain: space must be a finite label set");
    const std::size_t n = c.space.base.labels().labels.size();
    if (c.rates.size() != n || c.kill.size() != n)
        throw ConfigError("chain: rates/kill dimensions do not match state count");
    for (std::size_t i = 0; i < n; ++i) {
        if (c.rates[i].size() != n) throw ConfigError("chain: rates not square");
        for (std::size_t j = 0; j < n; ++j) {
            const double q = c.rates[i][j];
            if (!std::isfinite(q) || q < 0.0)
                throw ConfigError("chain: rates must be finite and >= 0");
            if (i == j && q != 0.0)
                throw ConfigError("chain: diagonal rates must be zero");
        }
        if (!std::isfinite(c.kill[i]) || c.kill[i] < 0.0)
            throw ConfigError("chain: kill rates must be finite and >= 0");
    }
}

void validate_diffusion(const IntervalDiffusionSpec& d) {
    validate(d.space);
    if (d.space.base.is_finite())
        throw ConfigError("diffusion: space must be an interval");
    if (!(d.dt > 0.0) || !std::isfinite(d.dt))
        throw ConfigError("diffusion: dt must be positive and finite");
    parse_scalar_fn(d.drift);
    parse_scalar_fn(d.sigma);
}

Path sample_chain(const FiniteChainSpec& c, const SpacePoint& start,
                  double horizon, RngStream& rng) {
    Path p;
    p.representation = Path::Representation::PiecewiseConstant;
    int i = c.index_of(start.label);
    p.events.push_back({0.0, start});
    const std::size_t n = c.kill.size();
    double t = 0.0;
    for (;;) {
        double total = c.kill[i];
        for (std::size_t j = 0; j < n; ++j) total += c.rates[i][j];
        if (total == 0.0) {
            p.lifetime = kInf;  // genuinely immortal, trajectory fully known
            return p;
        }
        const double hold = rng.exponential(total);
        if (t + hold >= horizon) {
            p.lifetime = kInf;
            p.censored = true;
            p.censor_time = horizon;
            return p;
        }
        t += hold;
        // One uniform decides the competition: kill first, then targets in
        // label order.
        double u = rng.u01() * total;
        if (u < c.kill[i]) {
            p.lifetime = t;
            return p;
        }
        u -= c.kill[i];
        int next = -1;
        double cum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            cum += c.rates[i][j];
            if (u < cum) {
                next = static_cast<int>(j);
                break;
            }
        }
        if (next < 0) {
            // Rounding pushed u past the last band; take the last positive rate.
            for (std::size_t j = n; j-- > 0;) {
                if (c.rates[i][j] > 0.0) {
                    next = static_cast<int>(j);
                    break;
                }
            }
        }
        i = next;
        p.events.push_back({t, c.point(i)});
    }
}

Path sample_diffusion(const IntervalDiffusionSpec& d, const SpacePoint& start,
                      double horizon, RngStream& rng) {
    const auto mu = parse_scalar_fn(d.drift);
    const auto sg = parse_scalar_fn(d.sigma);
    const auto& iv = d.space.base.interval();
    const double sqdt = std::sqrt(d.dt);

    Path p;
    p.representation = Path::Representation::Grid;
    p.dt = d.dt;
    p.events.push_back({0.0, start});
    double x = start.coord;
    for (long k = 1;; ++k) {
        const double tk = static_cast<double>(k) * d.dt;
        if (tk > horizon) {
            p.lifetime = kInf;
            p.censored = true;
            p.censor_time = horizon;
            return p;
        }
        x += mu(x) * d.dt + sg(x) * sqdt * rng.normal();
        if (x <= iv.lo) {
            if (d.kill_lo) {
                p.lifetime = tk;
                p.recorded_exit = SpacePoint::real_point(d.space.tag, iv.lo);
                return p;
            }
            x = std::min(2.0 * iv.lo - x, iv.hi);  // reflect, clamp huge steps
        } else if (x >= iv.hi) {
            if (d.kill_hi) {
                p.lifetime = tk;
                p.recorded_exit = SpacePoint::real_point(d.space.tag, iv.hi);
                return p;
            }
            x = std::max(2.0 * iv.hi - x, iv.lo);
        }
        p.events.push_back({tk, SpacePoint::real_point(d.space.tag, x)});
    }
}

}  // namespace

void validate(const ProcessSpec& spec) {
    if (const auto* c = std::get_if<FiniteChainSpec>(&spec)) {
        validate_chain(*c);
    } else {
        validate_diffusion(std::get<IntervalDiffusionSpec>(spec));
    }
}

std::function<double(double)> parse_scalar_fn(const std::string& key) {
    if (key == "zero") return [](double) { return 0.0; };
    if (key == "unit") return [](double) { return 1.0; };
    double a = 0.0, b = 0.0;
    if (std::sscanf(key.c_str(), "const(%lf)", &a) == 1)
        return [a](double) { return a; };
    if (std::sscanf(key.c_str(), "ou(%lf,%lf)", &a, &b) == 2)
        return [a, b](double x) { return a * (b - x); };
    throw ConfigError("unknown scalar function key: " + key);
}

Path sample_path(const ProcessSpec& spec, const SpacePoint& start,
                 double horizon, RngStream& rng) {
    if (!(horizon > 0.0)) throw DomainError("sample_path: horizon must be > 0");
    if (start.is_cemetery()) return Path::dead();
    if (!contains(space_of(spec), start))
        throw DomainError("sample_path: start " + to_string(start) +
                          " outside process space");
    if (const auto* c = std::get_if<FiniteChainSpec>(&spec))
        return sample_chain(*c, start, horizon, rng);
    return sample_diffusion(std::get<IntervalDiffusionSpec>(spec), start, horizon,
                            rng);
}

}  // namespace concatmc
