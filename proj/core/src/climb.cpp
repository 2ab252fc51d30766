#include "modalflow/climb.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "modalflow/rng.hpp"

namespace modalflow {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::left_component: return "left_component";
        case StopReason::empty_level: return "empty_level";
        case StopReason::fixed_point: return "fixed_point";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::projection_failed: return "projection_failed";
    }
    return "unknown";
}

ClimbContext::ClimbContext(const DensityModel& model, Grid grid, const DensityBounds& bounds)
    : model_(&model),
      grid_(std::move(grid)),
      bounds_(bounds),
      flow_(FlowControls::defaults_for(bounds, grid_.box())),
      projection_(ProjectionControls::defaults_for(bounds)),
      registry_(std::make_unique<ModeRegistry>(1e-4 * grid_.box().diameter())) {}

ClimbContext::ClimbContext(const DensityModel& model, Grid grid)
    : ClimbContext(model, grid, estimate_bounds(model, grid.box())) {}

ClimbContext ClimbContext::isolated() const {
    ClimbContext copy(*model_, grid_, bounds_);
    copy.cheap_connectivity = cheap_connectivity;
    return copy;
}

namespace {

bool segment_stays_above(const DensityModel& model, const Point& a, const Point& b, double t) {
    constexpr int kProbes = 32;
    for (int k = 1; k <= kProbes; ++k) {
        const double tau = static_cast<double>(k) / (kProbes + 1);
        if (model.eval(a + tau * (b - a)) < t) return false;
    }
    return true;
}

// Stop test of the level climb: does q_next still lie in the component of
// q at level t? Levels below the grid's resolvable floor cannot separate
// anything, so a grid failure counts as connected.
bool still_in_component(const ClimbContext& ctx, const Point& q, const Point& q_next, double t) {
    const double slack = std::max(2.0 * ctx.projection().level_tolerance, 1e-14 * (1.0 + t));
    if (ctx.cheap_connectivity)
        return segment_stays_above(ctx.model(), q, q_next, t - slack);
    try {
        return same_component(ctx.model(), q, q_next, t - slack, ctx.grid());
    } catch (const GridTooSmallError&) {
        return true;
    }
}

// Highest mode of the component of {f >= t} around seed, registered for a
// canonical id. Degrades to the seed's own peak when the grid cannot label
// the level.
std::optional<Mode> component_peak(const ClimbContext& ctx, const Point& seed, double t,
                                   double leaf_slack) {
    // the seed satisfies f >= t only up to the projection tolerance
    const double t_eff = t - std::max(2.0 * ctx.projection().level_tolerance, 1e-13 * (1.0 + t));
    ArgmaxControls ac;
    ac.flow = ctx.flow();
    ac.known_modes = ctx.registry().modes();
    ac.leaf_slack = ctx.cheap_connectivity ? leaf_slack : 0.0;
    Mode found;
    try {
        try {
            found = argmax_on_component(ctx.model(), seed, t_eff, ctx.grid(), ac);
        } catch (const GridTooSmallError&) {
            ac.known_modes.clear();
            ac.allow_grid_multistart = false;
            found = argmax_on_component(ctx.model(), seed, t_eff, ctx.grid(), ac);
        }
    } catch (const ArgmaxFailedError&) {
        return std::nullopt;
    } catch (const InputError&) {
        return std::nullopt;
    }
    return ctx.registry().match_or_register(found.location, found.level);
}

long default_iteration_cap(double span, double step) {
    const double raw = 10.0 * std::ceil(std::max(span, step) / step);
    return static_cast<long>(std::min(raw, 1e8));
}

}  // namespace

ClimbResult climb_alg1(const ClimbContext& ctx, const Point& x, const ClimbConfig& config) {
    const DensityModel& model = ctx.model();
    require(config.eta > 0.0, "climb_alg1: eta must be positive");
    require(x.size() == model.dim(), "climb_alg1: dimension mismatch");
    require_finite(x, "climb_alg1");

    const double eta = config.eta;
    const double f0 = model.eval(x);
    require(f0 > 0.0, "climb_alg1: start has zero density");

    const long max_iter = config.max_iterations > 0
                              ? config.max_iterations
                              : default_iteration_cap(ctx.bounds().fmax, eta);

    ClimbResult result;
    result.points.push_back(x);
    result.levels.push_back(f0);
    result.stop_reason = StopReason::max_iterations;

    Point q = x;
    double t_prev = f0;

    for (long k = 1; k <= max_iter; ++k) {
        const double t_k = f0 + static_cast<double>(k) * eta;

        Point q_next;
        bool projected = false;
        try {
            q_next = project_to_level(model, q, t_k, ctx.projection());
            projected = true;
        } catch (const ProjectionFailedError&) {
        }

        if (!projected) {
            // Either the component tops out below t_k (the climb is over) or
            // the solve genuinely failed. The component's own peak decides.
            const auto peak = component_peak(ctx, q, t_prev, 3.0 * eta);
            if (peak && t_k > peak->level) {
                const double fmax_hat = std::max(ctx.bounds().fmax, peak->level);
                result.stop_reason =
                    t_k > fmax_hat ? StopReason::empty_level : StopReason::left_component;
            } else {
                result.stop_reason = StopReason::projection_failed;
            }
            result.returned_mode = peak;
            result.iterations = k - 1;
            return result;
        }

        if (!still_in_component(ctx, q, q_next, t_prev)) {
            result.stop_reason = StopReason::left_component;
            result.returned_mode = component_peak(ctx, q, t_prev, 3.0 * eta);
            result.iterations = k - 1;
            return result;
        }

        result.points.push_back(q_next);
        result.levels.push_back(t_k);
        q = q_next;
        t_prev = t_k;
    }

    result.stop_reason = StopReason::max_iterations;
    result.returned_mode = component_peak(ctx, q, t_prev, 3.0 * eta);
    result.iterations = max_iter;
    return result;
}

// --- ball maximization -----------------------------------------------------------

namespace {

// Ascent along the sphere |y - center| = eps; spatial trust step with
// backtracking, stops when the tangential gradient or the step collapses.
Point sphere_ascent(const DensityModel& model, const Point& center, double eps, Point y,
                    int iterations) {
    double fy = model.eval(y);
    double s = 0.3 * eps;
    for (int it = 0; it < iterations; ++it) {
        const Point g = model.grad(y);
        const Point n = (y - center) / eps;
        const Point pg = g - g.dot(n) * n;
        const double pg_norm = pg.norm();
        if (pg_norm <= 1e-13 * (1.0 + g.norm())) break;

        bool moved = false;
        for (int bt = 0; bt < 24; ++bt) {
            Point dir = (y - center) + (s / pg_norm) * pg;
            Point y_try = center + eps * (dir / dir.norm());
            const double f_try = model.eval(y_try);
            if (f_try > fy) {
                y = std::move(y_try);
                fy = f_try;
                moved = true;
                break;
            }
            s *= 0.5;
            if (s < 1e-13 * eps) break;
        }
        if (!moved) break;
        s = std::min(1.5 * s, 0.5 * eps);
    }
    return y;
}

// Newton refinement of the stationarity system grad f(y) = mu (y - center)
// on the sphere. Returns the input unchanged when the solve degrades.
Point sphere_polish(const DensityModel& model, const Point& center, double eps, const Point& y0,
                    int iterations, double tangent_tolerance) {
    const int d = model.dim();
    Point y = y0;
    double f_y;
    Point g_y(d);
    Matrix h_y(d, d);
    model.eval_all(y, f_y, g_y, h_y);
    double mu = g_y.dot(y - center) / (eps * eps);

    Eigen::VectorXd residual(d + 1);
    Matrix jac(d + 1, d + 1);
    auto fill = [&]() {
        const Point r = y - center;
        residual.head(d) = g_y - mu * r;
        residual[d] = 0.5 * (r.squaredNorm() - eps * eps);
        jac.topLeftCorner(d, d) = h_y - mu * Matrix::Identity(d, d);
        jac.topRightCorner(d, 1) = -r;
        jac.bottomLeftCorner(1, d) = r.transpose();
        jac(d, d) = 0.0;
    };
    fill();
    double res_norm = residual.norm();

    for (int it = 0; it < iterations; ++it) {
        if (residual.head(d).norm() <= tangent_tolerance * (1.0 + g_y.norm()) &&
            std::abs(residual[d]) <= 1e-14 * eps * eps)
            break;
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) return y0;
        const Eigen::VectorXd delta = lu.solve(-residual);
        if (!delta.allFinite()) return y0;

        double step = 1.0;
        Point y_save = y;
        double mu_save = mu;
        for (int bt = 0; bt < 6; ++bt) {
            y = y_save + step * delta.head(d);
            mu = mu_save + step * delta[d];
            model.eval_all(y, f_y, g_y, h_y);
            fill();
            if (residual.norm() < res_norm || step < 0.05) break;
            step *= 0.5;
        }
        res_norm = residual.norm();
        const double r_norm = (y - center).norm();
        if (!y.allFinite() || r_norm < 0.5 * eps || r_norm > 1.5 * eps) return y0;
    }
    // snap exactly back to the sphere
    Point r = y - center;
    return center + (eps / r.norm()) * r;
}

}  // namespace

BoundaryMax boundary_max(const DensityModel& model, const Point& center, double eps,
                         const DensityBounds& bounds, const BoundaryMaxControls& controls) {
    require(eps > 0.0, "boundary_max: eps must be positive");
    require(center.size() == model.dim(), "boundary_max: dimension mismatch");
    require_finite(center, "boundary_max");
    const int d = model.dim();

    BoundaryMax best;
    auto consider = [&](const Point& y, bool interior) {
        const double v = model.eval(y);
        if (best.point.size() == 0 || v > best.value) {
            best.point = y;
            best.value = v;
            best.interior = interior;
        }
    };

    if (d == 1) {
        Point lo = center, hi = center;
        lo[0] -= eps;
        hi[0] += eps;
        consider(lo, false);
        consider(hi, false);
    } else {
        const Point g_c = model.grad(center);
        const double g_norm = g_c.norm();
        std::vector<Point> seeds;
        if (g_norm > 0.0)
            seeds.push_back(center + (eps / g_norm) * g_c);
        else {
            Point e = Point::Zero(d);
            e[0] = eps;
            seeds.push_back(center + e);
        }
        Rng rng(controls.seed);
        for (int i = 0; i < controls.random_starts; ++i)
            seeds.push_back(center + eps * rng.direction(d));

        for (const Point& seed : seeds) {
            Point y = sphere_ascent(model, center, eps, seed, controls.ascent_iterations);
            y = sphere_polish(model, center, eps, y, controls.newton_iterations,
                              controls.tangent_tolerance);
            consider(y, false);
        }
    }

    // A critical point can hide inside the ball only when the center
    // gradient is small (|grad| <= kappa2 * eps); test with a margin.
    const double threshold = controls.interior_test_threshold >= 0.0
                                 ? controls.interior_test_threshold
                                 : 4.0 * bounds.kappa2 * eps;
    if (model.grad(center).norm() < threshold) {
        const Point m = newton_polish_mode(model, center);
        if (m.allFinite() && (m - center).norm() < eps * (1.0 - 1e-9) &&
            model.grad(m).norm() <= 1e-7 * (1.0 + bounds.kappa1) && model.eval(m) > best.value) {
            // only a peak can beat the sphere: a saddle or minimum strictly
            // inside the ball always has ascent directions within the ball
            const Eigen::SelfAdjointEigenSolver<Matrix> es(model.hessian(m),
                                                           Eigen::EigenvaluesOnly);
            if (es.eigenvalues().maxCoeff() < 0.0) consider(m, true);
        }
    }

    return best;
}

ClimbResult climb_alg2(const ClimbContext& ctx, const Point& x, const ClimbConfig& config) {
    const DensityModel& model = ctx.model();
    require(config.eps > 0.0, "climb_alg2: eps must be positive");
    require(x.size() == model.dim(), "climb_alg2: dimension mismatch");
    require_finite(x, "climb_alg2");

    const double eps = config.eps;
    const double f0 = model.eval(x);
    require(f0 > 0.0, "climb_alg2: start has zero density");

    const long max_iter = config.max_iterations > 0
                              ? config.max_iterations
                              : default_iteration_cap(ctx.domain_diameter(), eps);

    BoundaryMaxControls bm_controls;

    ClimbResult result;
    result.points.push_back(x);
    result.levels.push_back(f0);
    result.stop_reason = StopReason::max_iterations;

    Point q = x;

    for (long k = 1; k <= max_iter; ++k) {
        const BoundaryMax bm = boundary_max(model, q, eps, ctx.bounds(), bm_controls);

        // the iterate is the argmax of f over the closed eps-ball. Inside the
        // open ball f stays below the ball max, so every point of the max
        // level set sits at distance >= eps from the center and the metric
        // projection onto that level set is this same argmax; solving the
        // projection again would only re-derive the tangency condition that
        // the sphere polish already enforces.
        const Point q_next = bm.point;

        if ((q_next - q).norm() <= ctx.flow().fixed_point_tolerance) {
            result.stop_reason = StopReason::fixed_point;
            result.iterations = k - 1;
            const Point m = newton_polish_mode(model, q_next);
            double fm;
            Point gm(model.dim());
            Matrix hm(model.dim(), model.dim());
            model.eval_all(m, fm, gm, hm);
            const Eigen::SelfAdjointEigenSolver<Matrix> es(hm);
            if (gm.norm() <= std::max(ctx.flow().mode_tolerance, 1e-9 * ctx.bounds().kappa1) &&
                es.eigenvalues().maxCoeff() < 0.0)
                result.returned_mode = ctx.registry().match_or_register(m, fm);
            return result;
        }

        result.points.push_back(q_next);
        result.levels.push_back(bm.value);
        q = q_next;
    }

    result.iterations = max_iter;
    return result;
}

// --- fixed-step iterations -------------------------------------------------------

Trajectory forward_euler_ms(const DensityModel& model, const Point& x, double eps,
                            const FlowControls& controls, long max_iterations) {
    require(eps > 0.0, "forward_euler_ms: eps must be positive");
    require(x.size() == model.dim(), "forward_euler_ms: dimension mismatch");
    require_finite(x, "forward_euler_ms");
    const long max_iter = max_iterations > 0 ? max_iterations : 200000;

    Trajectory traj;
    double f_cur = model.eval(x);
    if (f_cur <= controls.level_floor)
        throw InputError("forward_euler_ms: start density at or below the floor");
    traj.points.push_back(x);
    traj.params.push_back(0.0);
    traj.levels.push_back(f_cur);
    traj.terminal.point = x;
    traj.terminal.kind = TerminalKind::max_steps;

    Point cur = x;
    int decreases = 0;
    for (long i = 1; i <= max_iter; ++i) {
        const Point g = model.grad(cur);
        const Point next = cur + (eps / f_cur) * g;
        if (!next.allFinite()) {
            traj.terminal = {cur, TerminalKind::left_domain, g.norm(), false};
            return traj;
        }
        const double f_next = model.eval(next);
        if (f_next <= controls.level_floor) {
            traj.terminal = {cur, TerminalKind::left_domain, g.norm(), false};
            return traj;
        }

        traj.points.push_back(next);
        traj.params.push_back(static_cast<double>(i) * eps);
        traj.levels.push_back(f_next);

        const double g_norm = model.grad(next).norm();
        if ((next - cur).norm() <= controls.fixed_point_tolerance ||
            g_norm <= controls.mode_tolerance) {
            const Matrix h = model.hessian(next);
            const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
            const bool nd = es.eigenvalues().maxCoeff() < 0.0;
            traj.terminal = {next, nd ? TerminalKind::mode : TerminalKind::saddle_suspect,
                             g_norm, nd};
            return traj;
        }

        decreases = f_next < f_cur - 1e-15 * (1.0 + std::abs(f_cur)) ? decreases + 1 : 0;
        if (decreases >= 2) {
            traj.terminal = {next, TerminalKind::left_domain, g_norm, false};
            return traj;
        }
        cur = next;
        f_cur = f_next;
    }

    traj.terminal.point = traj.points.back();
    traj.terminal.kind = TerminalKind::max_steps;
    traj.terminal.grad_norm = model.grad(traj.points.back()).norm();
    return traj;
}

Point backward_euler_step(const DensityModel& model, const Point& x, double eps) {
    require(eps > 0.0, "backward_euler_step: eps must be positive");
    require(x.size() == model.dim(), "backward_euler_step: dimension mismatch");
    require_finite(x, "backward_euler_step");
    const int d = model.dim();
    const double scale = std::max(1.0, x.norm());

    Point y = x + eps * model.grad(x);
    double f_y;
    Point g_y(d);
    Matrix h_y(d, d);
    model.eval_all(y, f_y, g_y, h_y);
    Point residual = y - x - eps * g_y;

    for (int it = 0; it < 50; ++it) {
        if (residual.norm() <= 1e-12 * scale) return y;
        const Matrix jac = Matrix::Identity(d, d) - eps * h_y;
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible())
            throw StepFailedError("backward_euler_step: singular Newton system");
        const Point delta = lu.solve(-residual);
        if (!delta.allFinite())
            throw StepFailedError("backward_euler_step: non-finite Newton step");

        const double res_norm = residual.norm();
        double step = 1.0;
        for (int bt = 0; bt < 8; ++bt) {
            const Point y_try = y + step * delta;
            model.eval_all(y_try, f_y, g_y, h_y);
            const Point r_try = y_try - x - eps * g_y;
            if (r_try.norm() < res_norm || step < 1e-2) {
                y = y_try;
                residual = r_try;
                break;
            }
            step *= 0.5;
        }
    }
    if (residual.norm() <= 1e-12 * scale) return y;
    throw StepFailedError("backward_euler_step: no convergence");
}

}  // namespace modalflow
