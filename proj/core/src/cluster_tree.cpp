#include "modalflow/cluster_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace modalflow {

namespace {

struct BuildNode {
    int parent = -1;
    std::vector<int> children;
    double birth = 0.0;
    double death = 0.0;
    int created_at_sweep = -1;
    std::int64_t top_cell = -1;
    std::vector<std::int64_t> snapshot;
    bool dead = false;
};

std::int32_t uf_find(std::vector<std::int32_t>& parent, std::int32_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

ClusterTree build_cluster_tree(const DensityModel& model, const Grid& grid,
                               int level_count, double level_floor) {
    require(model.dim() == grid.dim(), "build_cluster_tree: dimension mismatch");
    require(level_count >= 8, "build_cluster_tree: need at least 8 levels");
    const std::int64_t n = grid.cell_count();

    std::vector<double> values(static_cast<std::size_t>(n));
    double vmax = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i)] = model.eval(grid.cell_center(i));
        vmax = std::max(vmax, values[static_cast<std::size_t>(i)]);
    }
    const double floor_level = level_floor > 0.0 ? level_floor : 1e-4 * vmax;
    require(floor_level < vmax, "build_cluster_tree: level floor above the density maximum");

    // grid must cover the support down to the floor
    for (std::int64_t i = 0; i < n; ++i) {
        if (values[static_cast<std::size_t>(i)] < floor_level) continue;
        const auto idx = grid.multi_index(i);
        for (int a = 0; a < grid.dim(); ++a)
            if (idx[a] == 0 || idx[a] == grid.cells_per_axis() - 1)
                throw GridTooSmallError("build_cluster_tree: boundary shell reaches the level floor");
    }

    std::vector<double> levels(static_cast<std::size_t>(level_count));
    for (int k = 0; k < level_count; ++k)
        levels[static_cast<std::size_t>(k)] =
            vmax - (vmax - floor_level) * k / (level_count - 1);

    std::vector<std::int64_t> order;
    order.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        if (values[static_cast<std::size_t>(i)] >= floor_level) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const double va = values[static_cast<std::size_t>(a)];
        const double vb = values[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;
    });

    std::vector<std::int32_t> uf(static_cast<std::size_t>(n));
    std::iota(uf.begin(), uf.end(), 0);
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    std::vector<int> branch_of(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<std::int64_t>> cells_of(static_cast<std::size_t>(n));

    std::vector<BuildNode> nodes;

    auto merge_cells = [&](std::int32_t keep, std::int32_t lose) {
        auto& a = cells_of[static_cast<std::size_t>(keep)];
        auto& b = cells_of[static_cast<std::size_t>(lose)];
        if (a.size() < b.size()) a.swap(b);
        a.insert(a.end(), b.begin(), b.end());
        b.clear();
        b.shrink_to_fit();
    };

    auto unite = [&](std::int32_t ra, std::int32_t rb, int branch) -> std::int32_t {
        // keep the larger cell list as the survivor
        std::int32_t keep = ra, lose = rb;
        if (cells_of[static_cast<std::size_t>(keep)].size() <
            cells_of[static_cast<std::size_t>(lose)].size())
            std::swap(keep, lose);
        uf[static_cast<std::size_t>(lose)] = keep;
        merge_cells(keep, lose);
        branch_of[static_cast<std::size_t>(keep)] = branch;
        return keep;
    };

    std::size_t ptr = 0;
    std::vector<std::int64_t> nbrs;
    for (int k = 0; k < level_count; ++k) {
        const double lvl = levels[static_cast<std::size_t>(k)];
        const double lvl_above = k > 0 ? levels[static_cast<std::size_t>(k - 1)] : vmax;
        const double bracket_mid = 0.5 * (lvl + lvl_above);

        while (ptr < order.size() &&
               values[static_cast<std::size_t>(order[ptr])] >= lvl) {
            const std::int64_t c = order[ptr++];
            active[static_cast<std::size_t>(c)] = true;
            cells_of[static_cast<std::size_t>(c)] = {c};

            grid.neighbors(c, nbrs);
            for (const std::int64_t nb : nbrs) {
                if (!active[static_cast<std::size_t>(nb)]) continue;
                std::int32_t rc = uf_find(uf, static_cast<std::int32_t>(c));
                std::int32_t rn = uf_find(uf, static_cast<std::int32_t>(nb));
                if (rc == rn) continue;

                const int ba = branch_of[static_cast<std::size_t>(rc)];
                const int bb = branch_of[static_cast<std::size_t>(rn)];
                if (ba < 0 || bb < 0) {
                    // a still-unbranched fresh cell attaching to a component
                    unite(rc, rn, std::max(ba, bb));
                    continue;
                }

                const std::size_t size_a = cells_of[static_cast<std::size_t>(rc)].size();
                const std::size_t size_b = cells_of[static_cast<std::size_t>(rn)].size();
                const bool artifact_a = nodes[static_cast<std::size_t>(ba)].children.empty() && size_a < 2;
                const bool artifact_b = nodes[static_cast<std::size_t>(bb)].children.empty() && size_b < 2;

                if (artifact_a || artifact_b) {
                    // single-cell grid noise: absorb instead of recording a merge
                    int keep_branch = ba, drop_branch = bb;
                    if (artifact_a && !artifact_b) std::swap(keep_branch, drop_branch);
                    else if (artifact_a && artifact_b &&
                             nodes[static_cast<std::size_t>(bb)].death > nodes[static_cast<std::size_t>(ba)].death)
                        std::swap(keep_branch, drop_branch);
                    nodes[static_cast<std::size_t>(drop_branch)].dead = true;
                    unite(rc, rn, keep_branch);
                    continue;
                }

                // genuine merge: the split level lies in (lvl, lvl_above]
                int parent_branch = -1;
                if (nodes[static_cast<std::size_t>(ba)].created_at_sweep == k)
                    parent_branch = ba;
                else if (nodes[static_cast<std::size_t>(bb)].created_at_sweep == k)
                    parent_branch = bb;

                if (parent_branch >= 0) {
                    const int child = parent_branch == ba ? bb : ba;
                    const std::int32_t child_root = parent_branch == ba ? rn : rc;
                    auto& cn = nodes[static_cast<std::size_t>(child)];
                    cn.parent = parent_branch;
                    cn.birth = std::min(bracket_mid, cn.death);
                    cn.snapshot = cells_of[static_cast<std::size_t>(child_root)];
                    nodes[static_cast<std::size_t>(parent_branch)].children.push_back(child);
                    unite(rc, rn, parent_branch);
                } else {
                    BuildNode p;
                    p.death = bracket_mid;
                    p.created_at_sweep = k;
                    p.top_cell = nodes[static_cast<std::size_t>(ba)].top_cell;
                    const int pid = static_cast<int>(nodes.size());
                    for (const auto& [branch, root] : {std::pair{ba, rc}, std::pair{bb, rn}}) {
                        auto& cn = nodes[static_cast<std::size_t>(branch)];
                        cn.parent = pid;
                        cn.birth = std::min(bracket_mid, cn.death);
                        cn.snapshot = cells_of[static_cast<std::size_t>(root)];
                        p.children.push_back(branch);
                    }
                    nodes.push_back(std::move(p));
                    unite(rc, rn, pid);
                }
            }

            const std::int32_t rc = uf_find(uf, static_cast<std::int32_t>(c));
            if (branch_of[static_cast<std::size_t>(rc)] < 0) {
                BuildNode fresh;
                fresh.death = values[static_cast<std::size_t>(c)];
                fresh.top_cell = c;
                fresh.created_at_sweep = -1;
                branch_of[static_cast<std::size_t>(rc)] = static_cast<int>(nodes.size());
                nodes.push_back(std::move(fresh));
            }
        }
    }

    // close surviving roots at the floor
    for (std::int64_t i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const std::int32_t r = uf_find(uf, static_cast<std::int32_t>(i));
        if (r != static_cast<std::int32_t>(i)) continue;
        const int b = branch_of[static_cast<std::size_t>(r)];
        if (b < 0) continue;
        auto& bn = nodes[static_cast<std::size_t>(b)];
        if (bn.parent == -1) {
            bn.birth = floor_level;
            bn.snapshot = cells_of[static_cast<std::size_t>(r)];
            if (bn.children.empty() && bn.snapshot.size() < 2) bn.dead = true;
        }
    }

    // compact into the public tree
    std::vector<int> remap(nodes.size(), -1);
    ClusterTree tree;
    tree.levels = levels;
    tree.level_floor = floor_level;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].dead) continue;
        remap[i] = static_cast<int>(tree.nodes.size());
        TreeNode out;
        out.id = remap[i];
        out.birth_level = nodes[i].birth;
        out.death_level = nodes[i].death;
        out.representative_cells = std::move(nodes[i].snapshot);
        tree.nodes.push_back(std::move(out));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].dead) continue;
        auto& out = tree.nodes[static_cast<std::size_t>(remap[i])];
        if (nodes[i].parent >= 0) out.parent = remap[static_cast<std::size_t>(nodes[i].parent)];
        for (const int ch : nodes[i].children)
            if (remap[static_cast<std::size_t>(ch)] >= 0)
                out.children.push_back(remap[static_cast<std::size_t>(ch)]);
        if (out.parent == -1) tree.roots.push_back(out.id);
    }

    // match leaves to modes by ascent from their first active cell
    FlowControls flow;
    flow.mode_tolerance = 1e-8 * std::max(vmax, 1e-300);
    flow.fixed_point_tolerance = 1e-12 * grid.box().diameter();
    flow.max_step_length = 0.05 * grid.box().diameter();
    ModeRegistry registry(1e-4 * grid.box().diameter());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].dead || remap[i] < 0) continue;
        auto& out = tree.nodes[static_cast<std::size_t>(remap[i])];
        if (!out.is_leaf() || nodes[i].top_cell < 0) continue;
        const Trajectory up =
            integrate_gamma(model, grid.cell_center(nodes[i].top_cell), flow);
        if (up.terminal.kind != TerminalKind::mode) continue;
        const Point loc = newton_polish_mode(model, up.terminal.point);
        out.mode = registry.match_or_register(loc, model.eval(loc));
        out.death_level = std::max(out.death_level, out.mode->level);
    }
    return tree;
}

std::vector<int> leaf_clusters(const ClusterTree& tree) {
    std::vector<int> out;
    for (const auto& n : tree.nodes)
        if (n.is_leaf()) out.push_back(n.id);
    return out;
}

std::optional<int> cluster_of(const DensityModel& model, const ClusterTree& tree,
                              const Grid& grid, const Point& x, double t) {
    require(x.size() == model.dim(), "cluster_of: dimension mismatch");
    if (model.eval(x) < t) return std::nullopt;
    const ComponentLabeling labeling = label_components(model, t, grid);
    const std::int32_t home = labeling.label_of(x);
    if (home < 0) return std::nullopt;

    for (const auto& node : tree.nodes) {
        if (!node.is_leaf() || !node.mode) continue;
        if (node.mode->level < t) continue;
        if (labeling.label_of(node.mode->location) != home) continue;
        // climb to the ancestor alive at t
        int id = node.id;
        while (tree.node(id).birth_level > t && tree.node(id).parent >= 0)
            id = tree.node(id).parent;
        return id;
    }
    return std::nullopt;
}

}  // namespace modalflow
