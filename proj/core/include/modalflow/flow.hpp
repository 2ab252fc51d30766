#pragma once

#include "modalflow/common.hpp"
#include "modalflow/density.hpp"

#include <mutex>
#include <optional>
#include <vector>

namespace modalflow {

// Integration controls. All tolerances are absolute; defaults_for derives
// the model-relative defaults (mode_tolerance = 1e-8 * kappa1, grad_floor =
// 1e-3 * kappa1, fixed_point_tolerance = 1e-12 * domain diameter).
struct FlowControls {
    double ode_tolerance = 1e-8;        // local step-doubling error target
    double chord_tolerance = 0.0;       // max chord deviation of recorded segments; 0 = off
    double mode_tolerance = 1e-9;       // gradient norm threshold at a mode
    double grad_floor = 1e-4;           // zeta flow cutoff
    double level_floor = 1e-12;         // minimum admissible density value
    double fixed_point_tolerance = 1e-12;
    double zeta_level_tolerance = 1e-6; // |f(zeta(s)) - (f(x)+s)| budget
    double initial_step = 1e-2;
    double max_step_length = 0.0;       // cap on |step| in space; 0 = off
    long max_steps = 500000;

    static FlowControls defaults_for(const DensityBounds& bounds, const Box& box);
};

enum class TerminalKind { mode, saddle_suspect, max_steps, left_domain, reached_level };

const char* to_string(TerminalKind k);

struct TerminalInfo {
    Point point;
    TerminalKind kind = TerminalKind::max_steps;
    double grad_norm = 0.0;
    bool hessian_negative_definite = false;
};

// A discrete flow line: points with matching parameter values (time for the
// gradient and log-gradient flows, level offset for the level flow) and
// density levels. Levels are non-decreasing up to 1e-9 per step.
struct Trajectory {
    std::vector<Point> points;
    std::vector<double> params;
    std::vector<double> levels;
    TerminalInfo terminal;
};

struct Mode {
    int id = -1;
    Point location;
    double level = 0.0;
};

// Register-or-match store of modes. Matching is by Euclidean distance
// within merge_radius; calls are serialized, so concurrent batches see a
// single linear history.
class ModeRegistry {
public:
    explicit ModeRegistry(double merge_radius) : merge_radius_(merge_radius) {
        require(merge_radius > 0.0, "ModeRegistry: merge radius must be positive");
    }

    Mode match_or_register(const Point& location, double level);
    std::optional<Mode> match(const Point& location) const;
    std::vector<Mode> modes() const;
    std::size_t size() const;
    double merge_radius() const { return merge_radius_; }

private:
    mutable std::mutex mutex_;
    std::vector<Mode> modes_;
    double merge_radius_;
};

// Flow along grad f (time parameterization). Classical RK4 with
// step-doubling error control; a step that would decrease the level by more
// than 1e-9 is retried at half size.
Trajectory integrate_gamma(const DensityModel& model, const Point& x,
                           const FlowControls& controls);

// Flow along grad f / f; traces the same line as integrate_gamma with a
// different time scale.
Trajectory integrate_xi(const DensityModel& model, const Point& x,
                        const FlowControls& controls);

// Flow along grad f / |grad f|^2, parameterized by the level itself:
// f(zeta(s)) = f(x) + s. Integrates s from 0 to t_end; stops early with
// kind saddle_suspect if |grad| falls below grad_floor.
Trajectory integrate_zeta(const DensityModel& model, const Point& x,
                          double t_end, const FlowControls& controls);

// Newton refinement of a near-critical point to a stationary point. Returns
// the polished point, or the input unchanged if refinement fails to improve.
Point newton_polish_mode(const DensityModel& model, const Point& x);

// Follows the gradient flow from x and matches the terminal mode into the
// registry. Trajectories ending anywhere but a negative-definite critical
// point report no mode (the start stays unassigned).
std::optional<Mode> assign_basin(const DensityModel& model, const Point& x,
                                 const FlowControls& controls, ModeRegistry& registry);

}  // namespace modalflow
