#include "modalflow/levelset.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modalflow {

namespace {

constexpr double kProbeSlack = 1e-12;  // rounding slack for level comparisons

// union-find with path halving
std::int32_t uf_find(std::vector<std::int32_t>& parent, std::int32_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

// --- Grid -------------------------------------------------------------------

Grid::Grid(Box box, int cells_per_axis) : box_(std::move(box)), cells_(cells_per_axis) {
    require(box_.dim() <= 3, "Grid: connectivity grids support d <= 3 only");
    require(cells_per_axis >= 2, "Grid: need at least 2 cells per axis");
    stride_.resize(box_.dim());
    total_ = 1;
    for (int a = 0; a < box_.dim(); ++a) {
        stride_[a] = total_;
        total_ *= cells_;
    }
}

Point Grid::cell_center(std::int64_t flat) const {
    Point x(dim());
    for (int a = 0; a < dim(); ++a) {
        const auto i = static_cast<int>((flat / stride_[a]) % cells_);
        x[a] = box_.lo[a] + (i + 0.5) * cell_width(a);
    }
    return x;
}

std::int64_t Grid::cell_of(const Point& x) const {
    require(x.size() == dim(), "Grid::cell_of: dimension mismatch");
    std::int64_t flat = 0;
    for (int a = 0; a < dim(); ++a) {
        auto i = static_cast<std::int64_t>(std::floor((x[a] - box_.lo[a]) / cell_width(a)));
        i = std::clamp<std::int64_t>(i, 0, cells_ - 1);
        flat += i * stride_[a];
    }
    return flat;
}

std::vector<int> Grid::multi_index(std::int64_t flat) const {
    std::vector<int> idx(dim());
    for (int a = 0; a < dim(); ++a) idx[a] = static_cast<int>((flat / stride_[a]) % cells_);
    return idx;
}

std::int64_t Grid::flat_index(const std::vector<int>& idx) const {
    require(static_cast<int>(idx.size()) == dim(), "Grid::flat_index: dimension mismatch");
    std::int64_t flat = 0;
    for (int a = 0; a < dim(); ++a) {
        require(idx[a] >= 0 && idx[a] < cells_, "Grid::flat_index: index out of range");
        flat += static_cast<std::int64_t>(idx[a]) * stride_[a];
    }
    return flat;
}

double Grid::max_cell_width() const {
    double w = 0.0;
    for (int a = 0; a < dim(); ++a) w = std::max(w, cell_width(a));
    return w;
}

void Grid::neighbors(std::int64_t flat, std::vector<std::int64_t>& out) const {
    out.clear();
    for (int a = 0; a < dim(); ++a) {
        const auto i = static_cast<int>((flat / stride_[a]) % cells_);
        if (i > 0) out.push_back(flat - stride_[a]);
        if (i + 1 < cells_) out.push_back(flat + stride_[a]);
    }
}

// --- ComponentLabeling --------------------------------------------------------

ComponentLabeling::ComponentLabeling(const Grid& grid, double level,
                                     std::vector<std::int32_t> labels,
                                     int component_count, std::vector<double> cell_values)
    : grid_(grid), level_(level), labels_(std::move(labels)),
      values_(std::move(cell_values)), count_(component_count) {}

std::int32_t ComponentLabeling::label_of(const Point& x) const {
    const std::int64_t home = grid_.cell_of(x);
    if (labels_[static_cast<std::size_t>(home)] >= 0)
        return labels_[static_cast<std::size_t>(home)];
    // nearest labeled cell within two shells; points sitting exactly on the
    // level can fall into a cell whose center dips below it
    const auto home_idx = grid_.multi_index(home);
    std::int32_t best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<int> idx(grid_.dim());
    const int d = grid_.dim();
    std::vector<int> delta(d, -2);
    for (;;) {
        bool ok = true;
        for (int a = 0; a < d; ++a) {
            idx[a] = home_idx[a] + delta[a];
            if (idx[a] < 0 || idx[a] >= grid_.cells_per_axis()) { ok = false; break; }
        }
        if (ok) {
            const std::int64_t flat = grid_.flat_index(idx);
            if (labels_[static_cast<std::size_t>(flat)] >= 0) {
                const double dist = (grid_.cell_center(flat) - x).norm();
                if (dist < best_dist) {
                    best_dist = dist;
                    best = labels_[static_cast<std::size_t>(flat)];
                }
            }
        }
        int a = 0;
        while (a < d && ++delta[a] == 3) delta[a++] = -2;
        if (a == d) break;
    }
    return best;
}

std::vector<std::int64_t> ComponentLabeling::cells_with_label(std::int32_t label) const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) out.push_back(static_cast<std::int64_t>(i));
    return out;
}

ComponentLabeling label_components(const DensityModel& model, double t, const Grid& grid) {
    require(model.dim() == grid.dim(), "label_components: dimension mismatch");
    require(t > 0.0, "label_components: level must be positive");
    const std::int64_t n = grid.cell_count();

    std::vector<double> values(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        values[static_cast<std::size_t>(i)] = model.eval(grid.cell_center(i));

    // the outermost shell must be strictly below the level
    for (std::int64_t i = 0; i < n; ++i) {
        if (values[static_cast<std::size_t>(i)] < t) continue;
        const auto idx = grid.multi_index(i);
        for (int a = 0; a < grid.dim(); ++a)
            if (idx[a] == 0 || idx[a] == grid.cells_per_axis() - 1)
                throw GridTooSmallError("label_components: boundary shell reaches the level; enlarge the box");
    }

    std::vector<std::int32_t> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::int64_t> nbrs;
    for (std::int64_t i = 0; i < n; ++i) {
        if (values[static_cast<std::size_t>(i)] < t) continue;
        grid.neighbors(i, nbrs);
        for (const std::int64_t j : nbrs) {
            if (j > i || values[static_cast<std::size_t>(j)] < t) continue;
            const std::int32_t ri = uf_find(parent, static_cast<std::int32_t>(i));
            const std::int32_t rj = uf_find(parent, static_cast<std::int32_t>(j));
            if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
        }
    }

    std::vector<std::int32_t> labels(static_cast<std::size_t>(n), -1);
    std::vector<std::int32_t> root_label(static_cast<std::size_t>(n), -1);
    std::int32_t next = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (values[static_cast<std::size_t>(i)] < t) continue;
        const std::int32_t r = uf_find(parent, static_cast<std::int32_t>(i));
        if (root_label[static_cast<std::size_t>(r)] < 0) root_label[static_cast<std::size_t>(r)] = next++;
        labels[static_cast<std::size_t>(i)] = root_label[static_cast<std::size_t>(r)];
    }
    return ComponentLabeling(grid, t, std::move(labels), next, std::move(values));
}

// --- projection ---------------------------------------------------------------

ProjectionControls ProjectionControls::defaults_for(const DensityBounds& bounds) {
    ProjectionControls c;
    c.level_tolerance = 1e-10 * bounds.fmax;
    c.grad_floor = 1e-9 * bounds.kappa1;
    return c;
}

namespace {

Point project_impl(const DensityModel& model, const Point& x, double t,
                   const ProjectionControls& controls, const Point* seed_hint) {
    require(x.size() == model.dim(), "project_to_level: dimension mismatch");
    require_finite(x, "project_to_level");
    const int d = model.dim();

    const double fx = model.eval(x);
    if (t < fx - controls.level_tolerance)
        throw InputError("project_to_level: target level below f(x)");
    if (std::abs(t - fx) <= controls.level_tolerance) return x;

    const Point gx = model.grad(x);
    const double gx_norm = gx.norm();
    if (gx_norm <= controls.grad_floor)
        throw ProjectionFailedError("project_to_level: gradient too small at start", x);

    const double s = (t - fx) / gx_norm;
    const double guard = controls.max_displacement >= 0.0
                             ? controls.max_displacement
                             : 4.0 * (t - fx) / gx_norm;

    Point q;
    double c;
    if (seed_hint != nullptr) {
        require(seed_hint->size() == model.dim(), "project_to_level: seed dimension mismatch");
        q = *seed_hint;
        const Point gs = model.grad(q);
        const double gs2 = gs.squaredNorm();
        c = gs2 > 0.0 ? (q - x).dot(gs) / gs2 : s / gx_norm;
    } else {
        q = x + (s / gx_norm) * gx;
        c = s / gx_norm;
    }

    double f_q;
    Point g_q(d);
    Matrix h_q(d, d);
    Eigen::VectorXd residual(d + 1);
    Matrix jac(d + 1, d + 1);

    auto compute_residual = [&](const Point& qq, double cc, double& fv, Point& gv) {
        Matrix hv(d, d);
        model.eval_all(qq, fv, gv, hv);
        residual.head(d) = qq - x - cc * gv;
        residual[d] = fv - t;
        jac.topLeftCorner(d, d) = Matrix::Identity(d, d) - cc * hv;
        jac.topRightCorner(d, 1) = -gv;
        jac.bottomLeftCorner(1, d) = gv.transpose();
        jac(d, d) = 0.0;
    };

    compute_residual(q, c, f_q, g_q);
    double res_norm = residual.norm();

    for (int it = 0; it < controls.max_iterations; ++it) {
        const Point qx = q - x;
        const double dist = qx.norm();
        const bool level_ok = std::abs(f_q - t) <= controls.level_tolerance;
        const bool pos_ok = residual.head(d).norm() <=
                            std::max(1e-13 * (1.0 + dist), 0.25 * controls.angle_tolerance * dist);
        if (level_ok && pos_ok) break;

        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible())
            throw ProjectionFailedError("project_to_level: singular Newton system", q);
        const Eigen::VectorXd delta = lu.solve(-residual);
        if (!delta.allFinite())
            throw ProjectionFailedError("project_to_level: non-finite Newton step", q);

        double step = 1.0;
        Point q_try;
        double c_try, f_try;
        Point g_try(d);
        for (int damp = 0; damp < 8; ++damp) {
            q_try = q + step * delta.head(d);
            c_try = c + step * delta[d];
            compute_residual(q_try, c_try, f_try, g_try);
            if (residual.norm() < res_norm || step < 1e-2) break;
            step *= 0.5;
        }
        q = q_try;
        c = c_try;
        f_q = f_try;
        g_q = g_try;
        res_norm = residual.norm();

        if (!q.allFinite() || (q - x).norm() > 2.0 * guard + 1e-12)
            throw ProjectionFailedError("project_to_level: iterate left the guard region", q);
        if (it + 1 == controls.max_iterations)
            throw ProjectionFailedError("project_to_level: no convergence", q);
    }

    // verify the stationarity geometry
    const Point qx = q - x;
    const double dist = qx.norm();
    if (dist > guard * (1.0 + 1e-9))
        throw ProjectionFailedError("project_to_level: displacement exceeds guard", q);
    if (dist > 1e-12 * (1.0 + x.norm())) {
        const double gq_norm = g_q.norm();
        if (gq_norm <= 0.0)
            throw ProjectionFailedError("project_to_level: vanishing gradient at target", q);
        const double cosang = std::clamp(qx.dot(g_q) / (dist * gq_norm), -1.0, 1.0);
        if (cosang <= 0.0 || std::acos(cosang) > controls.angle_tolerance)
            throw ProjectionFailedError("project_to_level: step not collinear with gradient", q);
    }
    return q;
}

}  // namespace

Point project_to_level(const DensityModel& model, const Point& x, double t,
                       const ProjectionControls& controls) {
    return project_impl(model, x, t, controls, nullptr);
}

Point project_to_level(const DensityModel& model, const Point& x, double t,
                       const ProjectionControls& controls, const Point& seed) {
    return project_impl(model, x, t, controls, &seed);
}

double distance_to_level(const DensityModel& model, const Point& x, double t,
                         const ProjectionControls& controls) {
    return (project_to_level(model, x, t, controls) - x).norm();
}

// --- connectivity ---------------------------------------------------------------

namespace {

bool segment_probes_pass(const DensityModel& model, const Point& x, const Point& y, double t) {
    constexpr int kProbes = 32;
    for (int k = 1; k <= kProbes; ++k) {
        const double tau = static_cast<double>(k) / (kProbes + 1);
        if (model.eval(x + tau * (y - x)) < t - kProbeSlack) return false;
    }
    return true;
}

void check_connectivity_pre(const DensityModel& model, const Point& x, const Point& y, double t) {
    require(x.size() == model.dim() && y.size() == model.dim(),
            "same_component: dimension mismatch");
    if (model.eval(x) < t - kProbeSlack || model.eval(y) < t - kProbeSlack)
        throw InputError("same_component: both points must satisfy f >= t");
}

}  // namespace

bool same_component(const DensityModel& model, const Point& x, const Point& y,
                    double t, const Grid& grid) {
    check_connectivity_pre(model, x, y, t);
    if ((x - y).norm() == 0.0) return true;
    if (segment_probes_pass(model, x, y, t)) return true;
    const ComponentLabeling labeling = label_components(model, t, grid);
    const std::int32_t lx = labeling.label_of(x);
    const std::int32_t ly = labeling.label_of(y);
    return lx >= 0 && lx == ly;
}

bool same_component(const DensityModel& model, const Point& x, const Point& y,
                    double t, const ComponentLabeling& labeling) {
    check_connectivity_pre(model, x, y, t);
    if ((x - y).norm() == 0.0) return true;
    if (segment_probes_pass(model, x, y, t)) return true;
    const std::int32_t lx = labeling.label_of(x);
    const std::int32_t ly = labeling.label_of(y);
    return lx >= 0 && lx == ly;
}

// --- argmax ---------------------------------------------------------------------

Mode argmax_on_component(const DensityModel& model, const Point& seed, double t,
                         const Grid& grid, const ArgmaxControls& controls) {
    require(seed.size() == model.dim(), "argmax_on_component: dimension mismatch");
    if (model.eval(seed) < t - kProbeSlack)
        throw InputError("argmax_on_component: seed below the level");

    const double tie_eps = 1e-12 * std::max(1.0, std::abs(t));
    std::optional<Mode> best;

    const Trajectory up = integrate_gamma(model, seed, controls.flow);
    if (up.terminal.kind == TerminalKind::mode) {
        const Point loc = newton_polish_mode(model, up.terminal.point);
        best = Mode{-1, loc, model.eval(loc)};
    }

    // leaf certificate: t close enough to the seed's own peak that no other
    // mode can share the component
    if (best && controls.leaf_slack > 0.0 && t >= best->level - controls.leaf_slack)
        return *best;

    for (const auto& m : controls.known_modes) {
        if (best && m.level <= best->level + tie_eps) continue;
        if (model.eval(m.location) < t) continue;
        if (same_component(model, seed, m.location, t, grid) &&
            (!best || m.level > best->level + tie_eps))
            best = m;
    }

    if (controls.allow_grid_multistart) {
        const ComponentLabeling labeling = label_components(model, t, grid);
        const std::int32_t home = labeling.label_of(seed);
        if (home >= 0) {
            std::vector<std::int64_t> cells = labeling.cells_with_label(home);
            std::sort(cells.begin(), cells.end(), [&](std::int64_t a, std::int64_t b) {
                const double va = labeling.cell_values()[static_cast<std::size_t>(a)];
                const double vb = labeling.cell_values()[static_cast<std::size_t>(b)];
                if (va != vb) return va > vb;
                return a < b;
            });
            const std::size_t decile = std::max<std::size_t>(1, cells.size() / 10);
            const std::size_t starts =
                std::min<std::size_t>(controls.max_multistarts, decile);
            for (std::size_t k = 0; k < starts; ++k) {
                const std::size_t pick = decile <= starts ? k : k * decile / starts;
                const Trajectory tr =
                    integrate_gamma(model, grid.cell_center(cells[pick]), controls.flow);
                if (tr.terminal.kind != TerminalKind::mode) continue;
                const Point loc = newton_polish_mode(model, tr.terminal.point);
                const double level = model.eval(loc);
                if (!best || level > best->level + tie_eps) best = Mode{-1, loc, level};
            }
        }
    }

    if (!best)
        throw ArgmaxFailedError("argmax_on_component: every ascent stalled");
    return *best;
}

}  // namespace modalflow
