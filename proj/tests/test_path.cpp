#include <cmath>

#include "doctest.h"

#include "concatmc/errors.hpp"
#include "concatmc/numeric.hpp"
#include "concatmc/path.hpp"

using namespace concatmc;

namespace {

Path two_step_path() {
    Path p;
    p.events = {{0.0, SpacePoint::label_point(1, "a")},
                {1.5, SpacePoint::label_point(1, "b")}};
    p.lifetime = 3.0;
    validate(p);
    return p;
}

}  // namespace

TEST_CASE("evaluate is the right-continuous step function, cemetery after death") {
    const Path p = two_step_path();
    CHECK(evaluate(p, 0.0) == SpacePoint::label_point(1, "a"));
    CHECK(evaluate(p, 1.4999) == SpacePoint::label_point(1, "a"));
    CHECK(evaluate(p, 1.5) == SpacePoint::label_point(1, "b"));
    CHECK(evaluate(p, 2.999) == SpacePoint::label_point(1, "b"));
    CHECK(evaluate(p, 3.0).is_cemetery());
    CHECK(evaluate(p, 100.0).is_cemetery());
    CHECK_THROWS_AS(evaluate(p, -0.1), DomainError);
}

TEST_CASE("the censored region is undefined, not cemetery") {
    Path p = two_step_path();
    p.lifetime = kInf;
    p.censored = true;
    p.censor_time = 2.0;
    validate(p);
    CHECK(evaluate(p, 1.99) == SpacePoint::label_point(1, "b"));
    CHECK_THROWS_AS(evaluate(p, 2.0), UndefinedRegionError);
    CHECK_THROWS_AS(evaluate(p, 10.0), UndefinedRegionError);
}

TEST_CASE("shift obeys the lifetime law exactly and relocates events") {
    const Path p = two_step_path();
    for (const double r : {0.0, 0.25, 1.5, 2.0, 2.9999999999999996}) {
        const Path q = shift(p, r);
        CHECK(q.lifetime == std::max(p.lifetime - r, 0.0));  // bit-exact form
        CHECK(evaluate(q, 0.0) == evaluate(p, r));
    }
    SUBCASE("shifting at or past the lifetime yields the dead path") {
        CHECK(shift(p, 3.0).is_dead());
        CHECK(shift(p, 50.0).is_dead());
    }
    SUBCASE("suffix events survive with rebased times") {
        const Path q = shift(p, 1.0);
        REQUIRE(q.events.size() == 2);
        CHECK(q.events[0].time == 0.0);
        CHECK(q.events[0].state == SpacePoint::label_point(1, "a"));
        CHECK(q.events[1].time == 0.5);
        CHECK(q.events[1].state == SpacePoint::label_point(1, "b"));
        CHECK(q.lifetime == 2.0);
    }
    SUBCASE("an immortal path stays immortal under shifts") {
        Path imm = two_step_path();
        imm.lifetime = kInf;
        validate(imm);
        CHECK(shift(imm, 7.0).lifetime == kInf);
        CHECK_FALSE(shift(imm, 7.0).censored);
    }
}

TEST_CASE("exit point: last held state, or the recorded boundary point") {
    const Path p = two_step_path();
    REQUIRE(exit_point(p).has_value());
    CHECK(*exit_point(p) == SpacePoint::label_point(1, "b"));

    SUBCASE("recorded exits (diffusion boundary snaps) win") {
        Path d = two_step_path();
        d.recorded_exit = SpacePoint::real_point(1, 1.0);
        CHECK(*exit_point(d) == SpacePoint::real_point(1, 1.0));
    }
    SUBCASE("no exit for dead, immortal, or censored paths") {
        CHECK_FALSE(exit_point(Path::dead()).has_value());
        Path imm = two_step_path();
        imm.lifetime = kInf;
        CHECK_FALSE(exit_point(imm).has_value());
        Path cen = two_step_path();
        cen.lifetime = kInf;
        cen.censored = true;
        cen.censor_time = 2.0;
        CHECK_FALSE(exit_point(cen).has_value());
    }
}

TEST_CASE("validate rejects broken event sequences") {
    Path p = two_step_path();
    SUBCASE("non-increasing times") {
        p.events[1].time = 0.0;
        CHECK_THROWS_AS(validate(p), DomainError);
    }
    SUBCASE("event at or past the lifetime") {
        p.events[1].time = 3.0;
        CHECK_THROWS_AS(validate(p), DomainError);
    }
    SUBCASE("cemetery as an event state") {
        p.events[1].state = SpacePoint::cemetery();
        CHECK_THROWS_AS(validate(p), DomainError);
    }
    SUBCASE("first event not at time zero") {
        p.events[0].time = 0.5;
        CHECK_THROWS_AS(validate(p), DomainError);
    }
}

TEST_CASE("the dead path is dead") {
    CHECK(Path::dead().is_dead());
    CHECK(evaluate(Path::dead(), 0.0).is_cemetery());
    CHECK(Path::dead().lifetime == 0.0);
}
