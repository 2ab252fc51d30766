#include "modalflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modalflow {

namespace {

// Flat storage for fast point/segment arithmetic (dim <= a few).
struct FlatPath {
    int dim = 0;
    std::vector<double> coords;  // vertex-major
    int vertex_count = 0;

    const double* vertex(int i) const { return coords.data() + static_cast<std::size_t>(i) * dim; }
    int segment_count() const { return std::max(vertex_count - 1, 0); }
};

FlatPath flatten(const Polyline& line) {
    require(!line.points.empty(), "hausdorff: empty polyline");
    FlatPath path;
    path.dim = static_cast<int>(line.points.front().size());
    require(path.dim >= 1, "hausdorff: zero-dimensional polyline");
    for (const Point& p : line.points) {
        require(static_cast<int>(p.size()) == path.dim, "hausdorff: mixed dimensions");
        require_finite(p, "hausdorff");
        // skip exact duplicates so every stored segment has positive length
        if (path.vertex_count > 0) {
            const double* prev = path.coords.data() +
                                 static_cast<std::size_t>(path.vertex_count - 1) * path.dim;
            double d2 = 0.0;
            for (int a = 0; a < path.dim; ++a) {
                const double diff = p[a] - prev[a];
                d2 += diff * diff;
            }
            if (d2 == 0.0) continue;
        }
        for (int a = 0; a < path.dim; ++a) path.coords.push_back(p[a]);
        ++path.vertex_count;
    }
    return path;
}

double point_distance2(const double* p, const double* q, int dim) {
    double d2 = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double diff = p[a] - q[a];
        d2 += diff * diff;
    }
    return d2;
}

// squared distance from p to segment [u, v]
double point_segment_distance2(const double* p, const double* u, const double* v, int dim) {
    double uv2 = 0.0, up_uv = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double e = v[a] - u[a];
        uv2 += e * e;
        up_uv += (p[a] - u[a]) * e;
    }
    const double tau = uv2 > 0.0 ? std::clamp(up_uv / uv2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double diff = p[a] - (u[a] + tau * (v[a] - u[a]));
        d2 += diff * diff;
    }
    return d2;
}

double distance_to_path(const double* p, const FlatPath& path) {
    const int dim = path.dim;
    if (path.vertex_count == 1) return std::sqrt(point_distance2(p, path.vertex(0), dim));
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < path.segment_count(); ++s)
        best = std::min(best, point_segment_distance2(p, path.vertex(s), path.vertex(s + 1), dim));
    return std::sqrt(best);
}

// One scan of b yields both the exact endpoint distances and the convexity
// upper bound for the whole subsegment [p, q]:
//   max_{x in [p,q]} dist(x, b) <= min_s max(dist(p, s), dist(q, s)).
struct SegmentScan {
    double dp = 0.0;
    double dq = 0.0;
    double upper = 0.0;
};

SegmentScan scan_segment(const double* p, const double* q, const FlatPath& b) {
    const int dim = b.dim;
    double dp2 = std::numeric_limits<double>::infinity();
    double dq2 = std::numeric_limits<double>::infinity();
    double ub2 = std::numeric_limits<double>::infinity();
    if (b.vertex_count == 1) {
        dp2 = point_distance2(p, b.vertex(0), dim);
        dq2 = point_distance2(q, b.vertex(0), dim);
        ub2 = std::max(dp2, dq2);
    } else {
        for (int s = 0; s < b.segment_count(); ++s) {
            const double* u = b.vertex(s);
            const double* v = b.vertex(s + 1);
            const double a2 = point_segment_distance2(p, u, v, dim);
            const double c2 = point_segment_distance2(q, u, v, dim);
            dp2 = std::min(dp2, a2);
            dq2 = std::min(dq2, c2);
            ub2 = std::min(ub2, std::max(a2, c2));
        }
    }
    return {std::sqrt(dp2), std::sqrt(dq2), std::sqrt(ub2)};
}

void refine_segment(const double* p, const double* q, const FlatPath& b, double tolerance,
                    double& best, int depth) {
    const SegmentScan scan = scan_segment(p, q, b);
    best = std::max({best, scan.dp, scan.dq});
    if (scan.upper <= best + tolerance) return;
    if (depth >= 64) {
        // unreachable for piecewise-smooth inputs; fail toward the bound
        best = std::max(best, scan.upper);
        return;
    }
    const int dim = b.dim;
    std::vector<double> mid(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) mid[static_cast<std::size_t>(a)] = 0.5 * (p[a] + q[a]);
    refine_segment(p, mid.data(), b, tolerance, best, depth + 1);
    refine_segment(mid.data(), q, b, tolerance, best, depth + 1);
}

double directed_hausdorff(const FlatPath& a, const FlatPath& b, double tolerance) {
    double best = 0.0;
    if (a.vertex_count == 1) return distance_to_path(a.vertex(0), b);
    for (int s = 0; s < a.segment_count(); ++s)
        refine_segment(a.vertex(s), a.vertex(s + 1), b, tolerance, best, 0);
    return best;
}

}  // namespace

double distance_to_polyline(const Point& p, const Polyline& line) {
    require_finite(p, "distance_to_polyline");
    const FlatPath path = flatten(line);
    require(static_cast<int>(p.size()) == path.dim, "distance_to_polyline: dimension mismatch");
    std::vector<double> buf(p.data(), p.data() + p.size());
    return distance_to_path(buf.data(), path);
}

double hausdorff_distance(const Polyline& a, const Polyline& b, double tolerance) {
    require(tolerance > 0.0, "hausdorff: tolerance must be positive");
    const FlatPath fa = flatten(a);
    const FlatPath fb = flatten(b);
    require(fa.dim == fb.dim, "hausdorff: dimension mismatch");
    return std::max(directed_hausdorff(fa, fb, tolerance), directed_hausdorff(fb, fa, tolerance));
}

Polyline climb_path(const ClimbResult& result) {
    Polyline line;
    line.points = result.points;
    if (result.returned_mode) line.points.push_back(result.returned_mode->location);
    return line;
}

std::vector<double> climb_path_levels(const ClimbResult& result) {
    std::vector<double> levels = result.levels;
    if (result.returned_mode) levels.push_back(result.returned_mode->level);
    return levels;
}

Polyline flow_path(const Trajectory& trajectory) {
    Polyline line;
    line.points = trajectory.points;
    return line;
}

Polyline truncate_at_level(const Polyline& line, const std::vector<double>& levels,
                           double target) {
    require(line.points.size() == levels.size(), "truncate_at_level: size mismatch");
    require(!levels.empty(), "truncate_at_level: empty polyline");
    require(target >= levels.front(), "truncate_at_level: target below the first level");

    Polyline out;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < target) {
            out.points.push_back(line.points[i]);
            continue;
        }
        if (levels[i] == target || i == 0) {
            out.points.push_back(line.points[i]);
            return out;
        }
        const double span = levels[i] - levels[i - 1];
        const double tau = span > 0.0 ? (target - levels[i - 1]) / span : 1.0;
        out.points.push_back(line.points[i - 1] + tau * (line.points[i] - line.points[i - 1]));
        return out;
    }
    return out;  // target above the last level: the whole line survives
}

namespace {

constexpr double kDistanceFloor = 1e-9;

void fit_rates(RateReport& report) {
    std::vector<double> lx, ly;
    for (const RatePoint& rp : report.points) {
        if (rp.hausdorff <= kDistanceFloor) {
            report.floor_hit = true;
            continue;
        }
        lx.push_back(std::log(rp.step));
        ly.push_back(std::log(rp.hausdorff));
    }
    const std::size_t n = lx.size();
    if (n >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        const double denom = n * sxx - sx * sx;
        report.slope = (n * sxy - sx * sy) / denom;
        report.intercept = (sy - report.slope * sx) / n;
        // steps are strictly decreasing, so the two smallest are the last two
        report.two_point_slope = (ly[n - 1] - ly[n - 2]) / (lx[n - 1] - lx[n - 2]);
    }
}

RateReport run_rate_experiment(const ClimbContext& ctx, const Point& x,
                               const std::vector<double>& steps, bool spatial) {
    require(steps.size() >= 4, "rate experiment: need at least four step sizes");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        require(steps[i] > 0.0, "rate experiment: steps must be positive");
        if (i > 0) require(steps[i] < steps[i - 1], "rate experiment: steps must decrease");
    }

    // densely resolved flow line from the same start, plus the exact peak
    FlowControls ref_controls = ctx.flow();
    ref_controls.ode_tolerance = 1e-10;
    ref_controls.chord_tolerance = 1e-7;
    const Trajectory ref = integrate_gamma(ctx.model(), x, ref_controls);
    require(ref.terminal.kind == TerminalKind::mode,
            "rate experiment: start does not flow to a mode");
    const Point ref_loc = newton_polish_mode(ctx.model(), ref.terminal.point);
    const Mode ref_mode = ctx.registry().match_or_register(ref_loc, ctx.model().eval(ref_loc));

    Polyline ref_line = flow_path(ref);
    ref_line.points.push_back(ref_mode.location);

    RateReport report;
    report.mode_location = ref_mode.location;
    report.mode_level = ref_mode.level;

    for (const double step : steps) {
        ClimbConfig config;
        if (spatial)
            config.eps = step;
        else
            config.eta = step;
        const ClimbResult climb =
            spatial ? climb_alg2(ctx, x, config) : climb_alg1(ctx, x, config);
        if (!climb.returned_mode || climb.returned_mode->id != ref_mode.id)
            throw StepFailedError("rate experiment: climb and flow disagree on the mode");

        // the algorithm's own polygonal line against the completed flow
        // line: the gap between the top climb iterate and the peak carries
        // the step-size signal, so the climb line is neither extended to the
        // mode nor truncated
        Polyline climb_line;
        climb_line.points = climb.points;
        report.points.push_back({step, hausdorff_distance(climb_line, ref_line)});
    }

    fit_rates(report);
    return report;
}

}  // namespace

RateReport rate_experiment_alg1(const ClimbContext& ctx, const Point& x,
                                const std::vector<double>& etas) {
    return run_rate_experiment(ctx, x, etas, false);
}

RateReport rate_experiment_alg2(const ClimbContext& ctx, const Point& x,
                                const std::vector<double>& epss) {
    return run_rate_experiment(ctx, x, epss, true);
}

}  // namespace modalflow
