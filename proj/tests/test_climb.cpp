#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modalflow/climb.hpp"
#include "modalflow/fixtures.hpp"
#include "modalflow/flow.hpp"

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

ClimbContext context_for(const Fixture& fx) {
    return ClimbContext(*fx.density,
                        Grid(fx.box, Grid::default_cells_per_axis(fx.box.dim())));
}

constexpr double kMix1LeftMode = 0.0078518874062668198;
constexpr double kMix1RightMode = 3.4921481125937332;
constexpr double kMix1Level095 = 0.13475420180179208;

}  // namespace

TEST_CASE("level climb walks an exact arithmetic level ladder") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eta = 1e-3 * ctx.bounds().fmax;
    const ClimbResult r = climb_alg1(ctx, p1(1.0), config);
    CHECK(r.stop_reason == StopReason::empty_level);
    REQUIRE(r.returned_mode.has_value());
    CHECK(r.returned_mode->location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
    REQUIRE(r.points.size() >= 3);
    REQUIRE(r.points.size() == r.levels.size());
    const double t0 = r.levels[0];
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        CHECK(r.levels[k] == doctest::Approx(t0 + static_cast<double>(k) * config.eta)
                                 .epsilon(1e-9));
        CHECK(fx->density->eval(r.points[k]) == doctest::Approx(r.levels[k]).epsilon(1e-9));
    }
    CHECK(r.iterations == static_cast<long>(r.points.size()) - 1);
}

TEST_CASE("level climbs from either bump land on that bump's mode") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eta = 1e-3 * ctx.bounds().fmax;
    const ClimbResult left = climb_alg1(ctx, p1(1.0), config);
    const ClimbResult right = climb_alg1(ctx, p1(2.8), config);
    REQUIRE(left.returned_mode.has_value());
    REQUIRE(right.returned_mode.has_value());
    CHECK(left.returned_mode->location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
    CHECK(right.returned_mode->location[0] == doctest::Approx(kMix1RightMode).epsilon(1e-6));
}

TEST_CASE("level climb from a mode stops on an empty level immediately") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eta = 1e-3 * ctx.bounds().fmax;
    const ClimbResult r = climb_alg1(ctx, p1(kMix1LeftMode), config);
    CHECK(r.stop_reason == StopReason::empty_level);
    CHECK(r.points.size() == 1);
    REQUIRE(r.returned_mode.has_value());
    CHECK(r.returned_mode->location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
}

TEST_CASE("each projection step is collinear with the gradient at its target") {
    const auto fx = fixture_by_name("d_mix2");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eta = 1e-3 * ctx.bounds().fmax;
    const ClimbResult r = climb_alg1(ctx, p2(2.2, 0.2), config);
    REQUIRE(r.points.size() >= 3);
    for (std::size_t k = 1; k < r.points.size(); ++k) {
        const Point d = r.points[k] - r.points[k - 1];
        const Point g = fx->density->grad(r.points[k]);
        REQUIRE(d.norm() > 0.0);
        REQUIRE(g.norm() > 0.0);
        const double cosine =
            std::min(1.0, std::max(-1.0, d.dot(g) / (d.norm() * g.norm())));
        CHECK(std::acos(cosine) <= 1e-6);
    }
}

TEST_CASE("ball climb takes steps of exactly the ball radius until the end") {
    const auto fx = fixture_by_name("d_mix2");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eps = 1e-2 * ctx.domain_diameter();
    const ClimbResult r = climb_alg2(ctx, p2(2.2, 0.2), config);
    CHECK(r.stop_reason == StopReason::fixed_point);
    REQUIRE(r.returned_mode.has_value());
    REQUIRE(r.points.size() >= 3);
    for (std::size_t k = 1; k + 1 < r.points.size(); ++k)
        CHECK(std::abs((r.points[k] - r.points[k - 1]).norm() - config.eps) <= 1e-8);
    // levels strictly climb
    for (std::size_t k = 1; k < r.levels.size(); ++k) CHECK(r.levels[k] > r.levels[k - 1]);
}

TEST_CASE("ball climb from a mode is an immediate fixed point") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eps = 1e-2 * ctx.domain_diameter();
    const ClimbResult r = climb_alg1(ctx, p1(kMix1LeftMode), ClimbConfig{1e-4, 0.0, 0});
    CHECK(r.points.size() == 1);
    const ClimbResult r2 = climb_alg2(ctx, p1(kMix1LeftMode), config);
    CHECK(r2.stop_reason == StopReason::fixed_point);
    CHECK(r2.points.size() <= 2);
    REQUIRE(r2.returned_mode.has_value());
    CHECK(r2.returned_mode->location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
}

TEST_CASE("ball climb on the isotropic gaussian stays on the radial ray") {
    const auto fx = fixture_by_name("d_gauss2");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eps = 0.05;
    const ClimbResult r = climb_alg2(ctx, p2(0.6, 0.8), config);
    REQUIRE(r.returned_mode.has_value());
    CHECK(r.returned_mode->location.norm() <= 1e-6);
    for (const Point& q : r.points) CHECK(std::abs(q[0] * 0.8 - q[1] * 0.6) <= 1e-6);
}

TEST_CASE("ball maximum matches a dense scan and the closed form") {
    const auto g2 = fixture_by_name("d_gauss2");
    const DensityBounds b2 = estimate_bounds(*g2->density, g2->box);
    BoundaryMaxControls controls;

    // unit gaussian: from (0.9, 0) with eps = 0.3 the max sits at (0.6, 0)
    const BoundaryMax on_sphere =
        boundary_max(*g2->density, p2(0.9, 0.0), 0.3, b2, controls);
    CHECK(!on_sphere.interior);
    CHECK(std::abs(on_sphere.point[0] - 0.6) <= 1e-8);
    CHECK(std::abs(on_sphere.point[1]) <= 1e-8);

    // ball containing the mode: the interior critical point wins
    const BoundaryMax interior =
        boundary_max(*g2->density, p2(0.1, 0.0), 0.3, b2, controls);
    CHECK(interior.interior);
    CHECK(interior.point.norm() <= 1e-8);
    CHECK(interior.value == doctest::Approx(0.15915494309189534).epsilon(1e-12));

    // two-bump line density from the between-bumps region: dense-scan oracle
    const auto mix = fixture_by_name("d_mix1");
    const DensityBounds bm = estimate_bounds(*mix->density, mix->box);
    const BoundaryMax ball =
        boundary_max(*mix->density, p1(1.0), 0.05, bm, controls);
    double best_x = 0.0, best_f = -1.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = 0.95 + 0.1 * i / 2000.0;
        const double f = mix->density->eval(p1(x));
        if (f > best_f) {
            best_f = f;
            best_x = x;
        }
    }
    CHECK(best_x == doctest::Approx(0.95).epsilon(1e-12));  // downhill end wins
    CHECK(ball.point[0] == doctest::Approx(0.95).epsilon(1e-9));
    CHECK(ball.value == doctest::Approx(kMix1Level095).epsilon(1e-10));
}

TEST_CASE("fixed-step mean-shift converges to the same mode as the climbs") {
    const auto fx = fixture_by_name("d_mix1");
    const DensityModel& m = *fx->density;
    const DensityBounds bounds = estimate_bounds(m, fx->box);
    const FlowControls controls = FlowControls::defaults_for(bounds, fx->box);

    const Trajectory t = forward_euler_ms(m, p1(1.0), 0.05, controls);
    CHECK(t.terminal.kind == TerminalKind::mode);
    CHECK(t.terminal.point[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-4));

    // a start already at the mode stays there
    const Trajectory still = forward_euler_ms(m, p1(kMix1LeftMode), 0.05, controls);
    CHECK(still.terminal.kind == TerminalKind::mode);
    CHECK(still.terminal.point[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-8));

    const auto g1 = fixture_by_name("d_gauss1");
    const DensityBounds gb = estimate_bounds(*g1->density, g1->box);
    const Trajectory g =
        forward_euler_ms(*g1->density, p1(1.0), 0.05,
                         FlowControls::defaults_for(gb, g1->box));
    CHECK(g.terminal.kind == TerminalKind::mode);
    CHECK(std::abs(g.terminal.point[0]) <= 1e-4);
}

TEST_CASE("one implicit step solves its defining equation") {
    const auto g1 = fixture_by_name("d_gauss1");
    const DensityModel& m = *g1->density;

    const Point y = backward_euler_step(m, p1(1.0), 0.1);
    CHECK(y[0] == doctest::Approx(0.97581719016876317).epsilon(1e-9));
    CHECK(std::abs(y[0] - (1.0 + 0.1 * m.grad(y)[0])) <= 1e-12);

    // at a critical point the step returns the point itself
    const Point at_mode = backward_euler_step(m, p1(0.0), 0.1);
    CHECK(std::abs(at_mode[0]) <= 1e-12);
}

TEST_CASE("iteration caps produce honest partial results") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    ClimbConfig config;
    config.eta = 1e-4 * ctx.bounds().fmax;
    config.max_iterations = 5;
    const ClimbResult r = climb_alg1(ctx, p1(1.0), config);
    CHECK(r.stop_reason == StopReason::max_iterations);
    CHECK(r.iterations == 5);
    CHECK(r.points.size() == 6);
    // the partial climb still names the peak of the component it was in
    REQUIRE(r.returned_mode.has_value());
    CHECK(r.returned_mode->location[0] == doctest::Approx(kMix1LeftMode).epsilon(1e-6));
}

TEST_CASE("invalid climb arguments are rejected") {
    const auto fx = fixture_by_name("d_mix1");
    const ClimbContext ctx = context_for(*fx);
    CHECK_THROWS_AS(climb_alg1(ctx, p1(1.0), ClimbConfig{0.0, 0.0, 0}), InputError);
    CHECK_THROWS_AS(climb_alg1(ctx, p1(1.0), ClimbConfig{-1e-3, 0.0, 0}), InputError);
    CHECK_THROWS_AS(climb_alg2(ctx, p1(1.0), ClimbConfig{0.0, 0.0, 0}), InputError);
    CHECK_THROWS_AS(climb_alg2(ctx, p1(1.0), ClimbConfig{0.0, -0.1, 0}), InputError);
    CHECK_THROWS_AS(climb_alg1(ctx, p2(0.0, 0.0), ClimbConfig{1e-3, 0.0, 0}), InputError);
    CHECK_THROWS_AS(backward_euler_step(*fx->density, p1(1.0), -0.1), InputError);
    CHECK_THROWS_AS(backward_euler_step(*fx->density, p1(1.0), 0.0), InputError);
}
