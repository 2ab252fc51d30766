#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "modalflow/climb.hpp"
#include "modalflow/fixtures.hpp"
#include "modalflow/metrics.hpp"

using namespace modalflow;

namespace {

Point p1(double x) {
    Point p(1);
    p[0] = x;
    return p;
}

Point p2(double x, double y) {
    Point p(2);
    p[0] = x;
    p[1] = y;
    return p;
}

Polyline line_of(std::initializer_list<Point> pts) {
    Polyline line;
    line.points.assign(pts.begin(), pts.end());
    return line;
}

Polyline random_walk(std::uint64_t seed, int vertices) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 0.4);
    Polyline line;
    Point cur = p2(0.0, 0.0);
    line.points.push_back(cur);
    for (int i = 1; i < vertices; ++i) {
        cur = p2(cur[0] + step(rng), cur[1] + step(rng));
        line.points.push_back(cur);
    }
    return line;
}

// sampled directed Hausdorff: max over dense samples of a of the exact
// distance to b; Lipschitz-1 in the sample point, so the error is at most
// half the sample spacing
double dense_hausdorff(const Polyline& a, const Polyline& b, int per_segment) {
    double best = 0.0;
    auto sweep = [&](const Polyline& from, const Polyline& to) {
        for (std::size_t s = 0; s + 1 < from.points.size(); ++s) {
            for (int k = 0; k <= per_segment; ++k) {
                const double tau = static_cast<double>(k) / per_segment;
                const Point x = from.points[s] + tau * (from.points[s + 1] - from.points[s]);
                best = std::max(best, distance_to_polyline(x, to));
            }
        }
    };
    sweep(a, b);
    sweep(b, a);
    return best;
}

constexpr double kMix1LeftMode = 0.0078518874062668198;

}  // namespace

TEST_CASE("hausdorff distance on hand-checkable shapes") {
    const Polyline a = line_of({p2(0.0, 0.0), p2(1.0, 0.0)});
    CHECK(hausdorff_distance(a, a) == 0.0);

    const Polyline shifted = line_of({p2(0.0, 0.3), p2(1.0, 0.3)});
    CHECK(hausdorff_distance(a, shifted) == doctest::Approx(0.3).epsilon(1e-12));

    // single point vs a segment: the far endpoint of the segment dominates
    const Polyline dot = line_of({p2(0.0, 0.0)});
    const Polyline wall = line_of({p2(2.0, -1.0), p2(2.0, 1.0)});
    CHECK(hausdorff_distance(dot, wall) ==
          doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(hausdorff_distance(wall, dot) == hausdorff_distance(dot, wall));

    // collinear overlap: containment in one direction, excess in the other
    const Polyline longer = line_of({p2(0.0, 0.0), p2(2.0, 0.0)});
    CHECK(hausdorff_distance(a, longer) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hausdorff distance agrees with dense sampling on random walks") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const Polyline a = random_walk(seed, 12);
        const Polyline b = random_walk(seed + 100, 15);
        const double exact = hausdorff_distance(a, b);
        const double sampled = dense_hausdorff(a, b, 2000);
        CHECK(exact == doctest::Approx(sampled).epsilon(1e-3));
        CHECK(exact >= sampled - 1e-12);  // sampling can only undershoot
        CHECK(hausdorff_distance(b, a) == exact);
    }
}

TEST_CASE("hausdorff distance satisfies the triangle inequality") {
    const Polyline a = random_walk(31, 10);
    const Polyline b = random_walk(32, 10);
    const Polyline c = random_walk(33, 10);
    const double ab = hausdorff_distance(a, b);
    const double bc = hausdorff_distance(b, c);
    const double ac = hausdorff_distance(a, c);
    CHECK(ac <= ab + bc + 1e-9);
}

TEST_CASE("polyline inputs are validated") {
    const Polyline a = line_of({p2(0.0, 0.0), p2(1.0, 0.0)});
    CHECK_THROWS_AS(hausdorff_distance(a, Polyline{}), InputError);
    CHECK_THROWS_AS(hausdorff_distance(a, line_of({p1(0.0)})), InputError);
    CHECK_THROWS_AS(hausdorff_distance(a, a, 0.0), InputError);
    CHECK_THROWS_AS(distance_to_polyline(p1(0.0), a), InputError);
    CHECK(distance_to_polyline(p2(0.5, 2.0), a) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(distance_to_polyline(p2(3.0, 0.0), a) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("level truncation interpolates the crossing vertex") {
    Polyline line = line_of({p1(0.0), p1(1.0), p1(2.0), p1(3.0)});
    const std::vector<double> levels = {0.0, 1.0, 2.0, 3.0};

    const Polyline cut = truncate_at_level(line, levels, 1.5);
    REQUIRE(cut.points.size() == 3);
    CHECK(cut.points[2][0] == doctest::Approx(1.5).epsilon(1e-12));

    const Polyline start_only = truncate_at_level(line, levels, 0.0);
    CHECK(start_only.points.size() == 1);

    const Polyline whole = truncate_at_level(line, levels, 10.0);
    CHECK(whole.points.size() == 4);

    CHECK_THROWS_AS(truncate_at_level(line, levels, -1.0), InputError);
    CHECK_THROWS_AS(truncate_at_level(line, {0.0, 1.0}, 0.5), InputError);
}

TEST_CASE("climb and flow paths expose the terminal mode vertex") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx(*fx->density, Grid(fx->box, 256));
    ClimbConfig config;
    config.eta = 1e-3;
    const ClimbResult r = climb_alg1(ctx, p1(1.0), config);
    REQUIRE(r.returned_mode.has_value());
    const Polyline path = climb_path(r);
    const std::vector<double> levels = climb_path_levels(r);
    REQUIRE(path.points.size() == r.points.size() + 1);
    REQUIRE(levels.size() == path.points.size());
    CHECK(path.points.back()[0] == doctest::Approx(r.returned_mode->location[0]));
    CHECK(levels.back() == doctest::Approx(r.returned_mode->level));
}

TEST_CASE("level-step convergence follows a square-root law") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx(*fx->density, Grid(fx->box, 256));
    const RateReport report =
        rate_experiment_alg1(ctx, p1(1.0), {4e-3, 2e-3, 1e-3, 5e-4});
    REQUIRE(report.points.size() == 4);
    CHECK(!report.floor_hit);
    CHECK(report.slope >= 0.35);
    CHECK(report.slope <= 0.75);
    CHECK(report.points.back().hausdorff < report.points.front().hausdorff);
    CHECK(report.mode_location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
}

TEST_CASE("ball-step convergence follows a linear law") {
    const auto fx = fixture_by_name("d_mix2");
    const ClimbContext ctx(*fx->density, Grid(fx->box, 256));
    const RateReport report =
        rate_experiment_alg2(ctx, p2(2.2, 0.2), {0.16, 0.08, 0.04, 0.02});
    REQUIRE(report.points.size() == 4);
    CHECK(!report.floor_hit);
    CHECK(report.slope >= 0.75);
    CHECK(report.slope <= 1.25);
    CHECK(report.points.back().hausdorff < report.points.front().hausdorff);
}

TEST_CASE("starts already at a mode bottom out at the distance floor") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx(*fx->density, Grid(fx->box, 256));
    const RateReport report = rate_experiment_alg1(
        ctx, p1(kMix1LeftMode + 1e-10), {4e-3, 2e-3, 1e-3, 5e-4});
    CHECK(report.floor_hit);
    CHECK(report.slope == 0.0);  // nothing left to fit
    REQUIRE(report.points.size() == 4);
    for (const RatePoint& rp : report.points) CHECK(rp.hausdorff <= 1e-9);
}

TEST_CASE("rate experiments validate their step ladders") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx(*fx->density, Grid(fx->box, 256));
    CHECK_THROWS_AS(rate_experiment_alg1(ctx, p1(1.0), {1e-3}), InputError);
    CHECK_THROWS_AS(rate_experiment_alg1(ctx, p1(1.0), {4e-3, 2e-3, 2e-3, 1e-3}),
                    InputError);
    CHECK_THROWS_AS(rate_experiment_alg1(ctx, p1(1.0), {4e-3, 2e-3, 1e-3, 0.0}),
                    InputError);
    CHECK_THROWS_AS(rate_experiment_alg1(ctx, p1(1.0), {1e-3, 2e-3, 4e-3, 8e-3}),
                    InputError);
}
