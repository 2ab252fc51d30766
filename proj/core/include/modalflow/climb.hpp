#pragma once

#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/flow.hpp"
#include "modalflow/levelset.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace modalflow {

// Step-size configuration; exactly one of eta (level step) or eps (spatial
// step) is consulted per run. max_iterations <= 0 selects the default cap:
// 10 * ceil(fmax / eta) for level climbs, 10 * ceil(diameter / eps) for
// spatial climbs.
struct ClimbConfig {
    double eta = 0.0;
    double eps = 0.0;
    long max_iterations = 0;
};

enum class StopReason { left_component, empty_level, fixed_point, max_iterations, projection_failed };

const char* to_string(StopReason r);

struct ClimbResult {
    std::vector<Point> points;   // q_0 .. q_K, q_0 = x
    std::vector<double> levels;  // f at each point
    StopReason stop_reason = StopReason::max_iterations;
    std::optional<Mode> returned_mode;
    long iterations = 0;
};

// Shared per-model state for climbs: connectivity grid, grid-estimated
// bounds and derived tolerances. Immutable after construction; one context
// serves any number of concurrent climbs.
class ClimbContext {
public:
    ClimbContext(const DensityModel& model, Grid grid, const DensityBounds& bounds);

    // Convenience: estimates bounds over the grid box (201 points per axis).
    ClimbContext(const DensityModel& model, Grid grid);

    // Fresh context over the same model, grid, and bounds but with an empty
    // private mode registry. Batch drivers climb with isolated contexts and
    // fold the returned mode locations afterwards in input order, which
    // keeps ids and stored locations independent of thread scheduling.
    ClimbContext isolated() const;

    const DensityModel& model() const { return *model_; }
    const Grid& grid() const { return grid_; }
    const DensityBounds& bounds() const { return bounds_; }
    const FlowControls& flow() const { return flow_; }
    const ProjectionControls& projection() const { return projection_; }
    double domain_diameter() const { return grid_.box().diameter(); }
    ModeRegistry& registry() const { return *registry_; }

    // When true, a failed segment probe during the stop test is taken as a
    // component change without grid labeling. Sound whenever the current
    // level is within a few steps of the component's own peak; used for
    // expensive models (KDE batches).
    bool cheap_connectivity = false;

private:
    const DensityModel* model_;
    Grid grid_;
    DensityBounds bounds_;
    FlowControls flow_;
    ProjectionControls projection_;
    std::unique_ptr<ModeRegistry> registry_;
};

// Level-step climbing: t_k = f(x) + k * eta; q_k is the metric projection of
// q_{k-1} onto {f = t_k}. Stops when the projection leaves the component of
// q_{k-1} at level t_{k-1} or the level set empties; returns the highest
// mode of that component.
ClimbResult climb_alg1(const ClimbContext& ctx, const Point& x, const ClimbConfig& config);

struct BoundaryMaxControls {
    int random_starts = 8;
    int ascent_iterations = 40;
    int newton_iterations = 30;
    double tangent_tolerance = 1e-13;
    // compare against interior critical candidates when
    // |grad f(center)| * eps falls below this; < 0 selects 4 * kappa2 * eps^2
    double interior_test_threshold = -1.0;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct BoundaryMax {
    Point point;
    double value = 0.0;
    bool interior = false;  // true when an interior mode beat the sphere
};

// Maximum of f over the closed ball B(center, eps): projected gradient
// ascent on the sphere from a deterministic uphill seed plus seeded random
// starts, Newton-polished; compared against interior critical candidates
// near the top.
BoundaryMax boundary_max(const DensityModel& model, const Point& center, double eps,
                         const DensityBounds& bounds, const BoundaryMaxControls& controls);

// Spatial-step climbing: t_k = max f over the eps-ball around q_{k-1};
// q_k is the projection of q_{k-1} onto {f = t_k} (cross-checked against
// the ball argmax within 1e-8 on non-final steps). Stops at a fixed point.
ClimbResult climb_alg2(const ClimbContext& ctx, const Point& x, const ClimbConfig& config);

// Fixed-step mean-shift iteration x <- x + eps * grad f(x) / f(x).
// Divergence (level decreasing on two consecutive steps) terminates with
// kind left_domain.
Trajectory forward_euler_ms(const DensityModel& model, const Point& x, double eps,
                            const FlowControls& controls, long max_iterations = 0);

// One backward Euler step of the gradient flow: solves
// y = x + eps * grad f(y) by Newton (residual <= 1e-12 * scale).
Point backward_euler_step(const DensityModel& model, const Point& x, double eps);

}  // namespace modalflow
