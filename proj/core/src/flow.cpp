#include "modalflow/flow.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace modalflow {

namespace {

constexpr double kMonotoneSlack = 1e-9;  // allowed per-step level decrease

struct Criticality {
    double grad_norm = 0.0;
    bool negative_definite = false;
};

Criticality classify(const DensityModel& model, const Point& x) {
    Criticality c;
    c.grad_norm = model.grad(x).norm();
    Eigen::SelfAdjointEigenSolver<Matrix> es(model.hessian(x), Eigen::EigenvaluesOnly);
    c.negative_definite = es.eigenvalues().maxCoeff() < 0.0;
    return c;
}

using Rhs = std::function<Point(const Point&)>;

Point rk4_step(const Rhs& rhs, const Point& y, double h) {
    const Point k1 = rhs(y);
    const Point k2 = rhs(y + 0.5 * h * k1);
    const Point k3 = rhs(y + 0.5 * h * k2);
    const Point k4 = rhs(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

struct IntegrateSpec {
    Rhs rhs;
    bool detect_mode = true;      // gamma/xi: stop at critical points
    double target_param = -1.0;   // zeta: integrate param to this value
    bool level_corrected = false; // zeta: re-project onto the exact level
    double zeta_grad_floor = 0.0;
};

Trajectory integrate(const DensityModel& model, const Point& x,
                     const FlowControls& controls, const IntegrateSpec& spec) {
    require(x.size() == model.dim(), "integrate: dimension mismatch");
    require_finite(x, "integrate");
    const double f0 = model.eval(x);
    require(f0 > controls.level_floor, "integrate: start below level floor");

    Trajectory traj;
    traj.points.push_back(x);
    traj.params.push_back(0.0);
    traj.levels.push_back(f0);

    auto finish = [&](const Point& p, TerminalKind kind) {
        Point q = p;
        // pin mode terminals to the critical point itself so terminals from
        // different parameterizations of the same line coincide
        if (kind == TerminalKind::mode) q = newton_polish_mode(model, p);
        const Criticality c = classify(model, q);
        traj.terminal = {q, kind, c.grad_norm, c.negative_definite};
        return traj;
    };

    // start already at a peak? flat starts that are not peaks (far tails,
    // saddles) are allowed to integrate: the step controller grows h until
    // they either climb out or demonstrably stall
    if (spec.detect_mode) {
        const Criticality c = classify(model, x);
        if (c.grad_norm <= controls.mode_tolerance && c.negative_definite)
            return finish(x, TerminalKind::mode);
    }

    Point y = x;
    double s = 0.0;  // parameter (time, or level offset for zeta)
    double fy = f0;
    double h = controls.initial_step;
    int stalled_steps = 0;  // consecutive accepted steps pinned in place
    if (spec.target_param >= 0.0) {
        if (spec.target_param == 0.0) return finish(x, TerminalKind::reached_level);
        h = std::min(h, spec.target_param / 8.0);
    }
    const double h_min = 1e-14 * std::max(1.0, std::abs(spec.target_param));

    for (long step = 0; step < controls.max_steps; ++step) {
        if (spec.zeta_grad_floor > 0.0 &&
            model.grad(y).norm() <= spec.zeta_grad_floor)
            return finish(y, TerminalKind::saddle_suspect);

        bool final_step = false;
        if (spec.target_param >= 0.0 && s + h >= spec.target_param) {
            h = spec.target_param - s;
            final_step = true;
        }

        const Point y_full = rk4_step(spec.rhs, y, h);
        const Point y_mid = rk4_step(spec.rhs, y, 0.5 * h);
        Point y_new = rk4_step(spec.rhs, y_mid, 0.5 * h);

        auto reject = [&](double factor) {
            h *= factor;
            if (h < h_min) h = h_min;
        };

        if (!y_full.allFinite() || !y_new.allFinite()) {
            if (h <= h_min) return finish(y, TerminalKind::saddle_suspect);
            reject(0.25);
            continue;
        }

        const double err = (y_full - y_new).norm() / 15.0;
        const double tol = controls.ode_tolerance * (1.0 + y.norm());
        if (err > tol && h > h_min) {
            reject(std::clamp(0.9 * std::pow(tol / std::max(err, 1e-300), 0.2),
                              0.1, 0.9));
            continue;
        }

        if (controls.max_step_length > 0.0 &&
            (y_new - y).norm() > controls.max_step_length && h > h_min) {
            reject(0.5);
            continue;
        }
        if (controls.chord_tolerance > 0.0 &&
            point_segment_distance(y_mid, y, y_new) > controls.chord_tolerance &&
            h > h_min) {
            reject(0.5);
            continue;
        }

        double f_new = model.eval(y_new);
        if (f_new < fy - kMonotoneSlack && h > h_min) {
            reject(0.5);
            continue;
        }

        const double s_new = s + h;
        if (spec.level_corrected) {
            // pull the iterate back onto the exact target level along the
            // gradient; kills level drift without leaving the flow line
            const double target = f0 + s_new;
            for (int it = 0; it < 3; ++it) {
                const Point g = model.grad(y_new);
                const double gn2 = g.squaredNorm();
                if (gn2 <= 0.0) break;
                y_new += ((target - f_new) / gn2) * g;
                f_new = model.eval(y_new);
                if (std::abs(f_new - target) < 1e-14 * std::max(1.0, target)) break;
            }
        }
        if (f_new < controls.level_floor)
            return finish(y_new, TerminalKind::left_domain);

        const double displacement = (y_new - y).norm();
        y = y_new;
        s = s_new;
        fy = f_new;
        traj.points.push_back(y);
        traj.params.push_back(s);
        traj.levels.push_back(fy);

        if (spec.target_param >= 0.0 && final_step)
            return finish(y, TerminalKind::reached_level);

        // near a mode the average speed over a step tracks the gradient
        // norm, so a speed test fires as soon as the gradient tolerance is
        // reachable instead of waiting for an absolute-displacement crawl;
        // a flat point that is not a peak only counts as a stall once it
        // survives many step-growth cycles without moving
        if (spec.detect_mode && (displacement <= controls.fixed_point_tolerance ||
                                 displacement <= h * controls.mode_tolerance)) {
            const Criticality c = classify(model, y);
            if (c.grad_norm <= controls.mode_tolerance) {
                if (c.negative_definite) return finish(y, TerminalKind::mode);
                if (++stalled_steps >= 50) return finish(y, TerminalKind::saddle_suspect);
            }
        } else {
            stalled_steps = 0;
        }

        // grow the step; the error controller shrinks it again if needed
        if (err < 0.25 * tol) h *= std::min(5.0, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2));
    }
    traj.terminal = {y, TerminalKind::max_steps, model.grad(y).norm(), false};
    return traj;
}

}  // namespace

FlowControls FlowControls::defaults_for(const DensityBounds& bounds, const Box& box) {
    FlowControls c;
    c.mode_tolerance = 1e-8 * bounds.kappa1;
    c.grad_floor = 1e-3 * bounds.kappa1;
    c.fixed_point_tolerance = 1e-12 * box.diameter();
    c.max_step_length = 0.05 * box.diameter();
    return c;
}

const char* to_string(TerminalKind k) {
    switch (k) {
        case TerminalKind::mode: return "mode";
        case TerminalKind::saddle_suspect: return "saddle_suspect";
        case TerminalKind::max_steps: return "max_steps";
        case TerminalKind::left_domain: return "left_domain";
        case TerminalKind::reached_level: return "reached_level";
    }
    return "unknown";
}

Trajectory integrate_gamma(const DensityModel& model, const Point& x,
                           const FlowControls& controls) {
    IntegrateSpec spec;
    spec.rhs = [&model](const Point& y) { return model.grad(y); };
    return integrate(model, x, controls, spec);
}

Trajectory integrate_xi(const DensityModel& model, const Point& x,
                        const FlowControls& controls) {
    IntegrateSpec spec;
    spec.rhs = [&model, &controls](const Point& y) -> Point {
        const double f = std::max(model.eval(y), controls.level_floor);
        return model.grad(y) / f;
    };
    return integrate(model, x, controls, spec);
}

Trajectory integrate_zeta(const DensityModel& model, const Point& x,
                          double t_end, const FlowControls& controls) {
    require(t_end >= 0.0, "integrate_zeta: t_end must be >= 0");
    IntegrateSpec spec;
    spec.rhs = [&model](const Point& y) -> Point {
        const Point g = model.grad(y);
        const double n2 = g.squaredNorm();
        return n2 > 0.0 ? Point(g / n2) : Point(Point::Zero(y.size()));
    };
    spec.detect_mode = false;
    spec.target_param = t_end;
    spec.level_corrected = true;
    spec.zeta_grad_floor = controls.grad_floor;
    return integrate(model, x, controls, spec);
}

Point newton_polish_mode(const DensityModel& model, const Point& x) {
    Point best = x;
    double best_norm = model.grad(x).norm();
    Point y = x;
    for (int it = 0; it < 25; ++it) {
        double f;
        Point g(model.dim());
        Matrix h(model.dim(), model.dim());
        model.eval_all(y, f, g, h);
        Eigen::FullPivLU<Matrix> lu(h);
        if (!lu.isInvertible()) break;
        const Point delta = lu.solve(g);
        if (!delta.allFinite()) break;

        // backtrack: a full step can overshoot on shallow, wiggly densities,
        // so halve until the gradient norm drops without the density
        // collapsing (a dead-flat far region also has a tiny gradient, but
        // walking there is divergence, not polish)
        Point y_next = y;
        double gn = best_norm;
        bool improved = false;
        double alpha = 1.0;
        for (int bt = 0; bt < 7; ++bt, alpha *= 0.5) {
            const Point candidate = y - alpha * delta;
            if (!candidate.allFinite()) continue;
            if (model.eval(candidate) < f * (1.0 - 1e-9)) continue;
            const double cn = model.grad(candidate).norm();
            if (cn < gn) {
                y_next = candidate;
                gn = cn;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        best = y_next;
        best_norm = gn;
        y = y_next;
        if (gn < 1e-15) break;
    }
    return best;
}

Mode ModeRegistry::match_or_register(const Point& location, double level) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& m : modes_)
        if ((m.location - location).norm() <= merge_radius_) return m;
    Mode m{static_cast<int>(modes_.size()), location, level};
    modes_.push_back(m);
    return m;
}

std::optional<Mode> ModeRegistry::match(const Point& location) const {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& m : modes_)
        if ((m.location - location).norm() <= merge_radius_) return m;
    return std::nullopt;
}

std::vector<Mode> ModeRegistry::modes() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return modes_;
}

std::size_t ModeRegistry::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return modes_.size();
}

std::optional<Mode> assign_basin(const DensityModel& model, const Point& x,
                                 const FlowControls& controls, ModeRegistry& registry) {
    const Trajectory traj = integrate_gamma(model, x, controls);
    if (traj.terminal.kind != TerminalKind::mode) return std::nullopt;
    const Point polished = newton_polish_mode(model, traj.terminal.point);
    return registry.match_or_register(polished, model.eval(polished));
}

}  // namespace modalflow
