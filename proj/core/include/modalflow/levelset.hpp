#pragma once

#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/flow.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace modalflow {

// Uniform cell grid over a box. Connectivity work is capped at d <= 3;
// defaults are 256 cells per axis for d <= 2 and 64 for d = 3.
class Grid {
public:
    Grid(Box box, int cells_per_axis);

    static int default_cells_per_axis(int dim) { return dim <= 2 ? 256 : 64; }

    const Box& box() const { return box_; }
    int dim() const { return box_.dim(); }
    int cells_per_axis() const { return cells_; }
    std::int64_t cell_count() const { return total_; }

    Point cell_center(std::int64_t flat) const;
    std::int64_t cell_of(const Point& x) const;  // clamped to the box
    std::vector<int> multi_index(std::int64_t flat) const;
    std::int64_t flat_index(const std::vector<int>& idx) const;
    double cell_width(int axis) const { return (box_.hi[axis] - box_.lo[axis]) / cells_; }
    double max_cell_width() const;

    // flat indices of face-adjacent neighbors
    void neighbors(std::int64_t flat, std::vector<std::int64_t>& out) const;

private:
    Box box_;
    int cells_ = 0;
    std::int64_t total_ = 0;
    std::vector<std::int64_t> stride_;
};

// Connected components of the upper level set {f >= t} on a grid: cells with
// center value >= t, face adjacency. Labels are contiguous from 0 in
// first-seen scan order; cells below the level hold -1.
class ComponentLabeling {
public:
    ComponentLabeling(const Grid& grid, double level, std::vector<std::int32_t> labels,
                      int component_count, std::vector<double> cell_values);

    const Grid& grid() const { return grid_; }
    double level() const { return level_; }
    int component_count() const { return count_; }
    std::int32_t label_of_cell(std::int64_t flat) const { return labels_[static_cast<std::size_t>(flat)]; }
    // label at x's cell; falls back to the nearest labeled cell within two
    // shells (points at the exact level can sit in a cell whose center dips
    // below it)
    std::int32_t label_of(const Point& x) const;
    const std::vector<double>& cell_values() const { return values_; }
    std::vector<std::int64_t> cells_with_label(std::int32_t label) const;

private:
    Grid grid_;
    double level_;
    std::vector<std::int32_t> labels_;
    std::vector<double> values_;
    int count_ = 0;
};

// Labels {f >= t} on the grid. Throws GridTooSmallError if any boundary
// shell cell carries f >= t (the grid does not cover the support at t).
ComponentLabeling label_components(const DensityModel& model, double t, const Grid& grid);

struct ProjectionControls {
    double level_tolerance = 1e-12;    // |f(q) - t| target (factory: 1e-10 * fmax)
    double angle_tolerance = 1e-6;     // radians between (q - x) and grad f(q)
    double grad_floor = 0.0;           // reject starts with |grad| below this
    int max_iterations = 60;
    double max_displacement = -1.0;    // >=0: explicit cap on |q - x|;
                                       // <0: default guard 4 (t - f(x)) / |grad f(x)|

    static ProjectionControls defaults_for(const DensityBounds& bounds);
};

// Metric projection of x onto the level set {f = t}, t >= f(x): Newton on
// the stationarity system  q - x = c * grad f(q),  f(q) = t,  seeded at
// x + s * grad/|grad| with s = (t - f(x)) / |grad f(x)|. Throws
// ProjectionFailedError (carrying the last iterate) when Newton leaves the
// guard region or fails to converge.
Point project_to_level(const DensityModel& model, const Point& x, double t,
                       const ProjectionControls& controls);

// Same, but Newton starts from an explicit seed (used when a near-solution
// is already known, e.g. a ball argmax on the target level).
Point project_to_level(const DensityModel& model, const Point& x, double t,
                       const ProjectionControls& controls, const Point& seed);

double distance_to_level(const DensityModel& model, const Point& x, double t,
                         const ProjectionControls& controls);

// True if x and y lie in the same connected component of {f >= t}. Fast
// path: f >= t at 32 equispaced probes of the segment [x, y] (sufficient,
// the segment then connects them inside the set); otherwise compares grid
// component labels.
bool same_component(const DensityModel& model, const Point& x, const Point& y,
                    double t, const Grid& grid);

// Same, but consults `labeling` (must be at level t) for the slow path.
bool same_component(const DensityModel& model, const Point& x, const Point& y,
                    double t, const ComponentLabeling& labeling);

struct ArgmaxControls {
    FlowControls flow;
    // candidate modes that may lie in the component (e.g. from a registry);
    // consulted before falling back to a grid multi-start
    std::vector<Mode> known_modes;
    // when > 0, trust the seed's own mode whenever t is within this many
    // level units of it, skipping any multi-start (leaf certificate)
    double leaf_slack = 0.0;
    int max_multistarts = 12;
    bool allow_grid_multistart = true;
};

// Highest mode of the component of {f >= t} containing seed (f(seed) >= t).
// Gradient ascent from the seed handles the leaf case; when a higher mode
// may share the component, ascent restarts from the top-decile cells of the
// component. Throws ArgmaxFailedError when every start stalls.
Mode argmax_on_component(const DensityModel& model, const Point& seed, double t,
                         const Grid& grid, const ArgmaxControls& controls);

}  // namespace modalflow
