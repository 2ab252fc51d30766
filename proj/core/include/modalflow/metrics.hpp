#pragma once

#include "modalflow/climb.hpp"
#include "modalflow/common.hpp"
#include "modalflow/flow.hpp"

#include <vector>

namespace modalflow {

struct Polyline {
    std::vector<Point> points;
};

// Distance from a point to the closest point of the polyline.
double distance_to_polyline(const Point& p, const Polyline& line);

// Hausdorff distance between two polylines, exact to the given absolute
// tolerance (branch-and-bound over subsegments; the distance to a single
// segment is convex along a segment, so endpoint maxima give upper bounds).
double hausdorff_distance(const Polyline& a, const Polyline& b, double tolerance = 1e-10);

// The discrete path of a climb including the final jump onto the returned
// mode, paired with its vertex levels.
Polyline climb_path(const ClimbResult& result);
std::vector<double> climb_path_levels(const ClimbResult& result);

Polyline flow_path(const Trajectory& trajectory);

// Prefix of the polyline up to the first crossing of f = target (linear
// interpolation between the bracketing vertices). levels must be
// non-decreasing and parallel to the points.
Polyline truncate_at_level(const Polyline& line, const std::vector<double>& levels,
                           double target);

struct RatePoint {
    double step = 0.0;       // eta (level climbs) or eps (spatial climbs)
    double hausdorff = 0.0;  // distance between climb path and flow line
};

struct RateReport {
    std::vector<RatePoint> points;
    double slope = 0.0;            // log-log least squares
    double intercept = 0.0;
    double two_point_slope = 0.0;  // secant through the two smallest steps
    bool floor_hit = false;        // some distance fell to the noise floor
    Point mode_location;
    double mode_level = 0.0;
};

// Shrinking-step convergence study: climbs from x at each step size are
// compared (Hausdorff) against a tightly resolved gradient-flow line from
// the same start. Steps must be positive, strictly decreasing, at least
// four. Climb and flow must agree on the terminal mode.
RateReport rate_experiment_alg1(const ClimbContext& ctx, const Point& x,
                                const std::vector<double>& etas);
RateReport rate_experiment_alg2(const ClimbContext& ctx, const Point& x,
                                const std::vector<double>& epss);

}  // namespace modalflow
