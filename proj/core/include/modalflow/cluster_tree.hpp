#pragma once

#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/flow.hpp"
#include "modalflow/levelset.hpp"

#include <optional>
#include <vector>

namespace modalflow {

// One component branch of the upper-level-set hierarchy, in increasing-level
// convention: the node is born where it becomes a distinct component (its
// parent's split level, or the sweep floor for roots) and dies where it
// vanishes at its mode (leaves) or splits into children (internal nodes).
// birth_level < death_level; every edge satisfies parent birth < child birth.
struct TreeNode {
    int id = -1;
    int parent = -1;  // -1 for roots
    std::vector<int> children;
    double birth_level = 0.0;
    double death_level = 0.0;
    std::optional<Mode> mode;  // present on every leaf
    // grid cells of the component at its birth level
    std::vector<std::int64_t> representative_cells;

    bool is_leaf() const { return children.empty(); }
};

struct ClusterTree {
    std::vector<TreeNode> nodes;
    std::vector<int> roots;
    std::vector<double> levels;  // descending sweep grid actually used
    double level_floor = 0.0;

    const TreeNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
};

// Builds the component hierarchy of {f >= t} by sweeping t down a uniform
// level grid from the maximum cell value to level_floor (default
// 1e-4 * that maximum). Merge levels are bracketed to one grid step and
// reported at the bracket midpoint. Single-cell branches that never grew
// past one cell are treated as grid noise and absorbed. Each leaf is matched
// to its mode by gradient ascent from its first active cell.
ClusterTree build_cluster_tree(const DensityModel& model, const Grid& grid,
                               int level_count = 256, double level_floor = -1.0);

// Leaf node ids, ordered by id.
std::vector<int> leaf_clusters(const ClusterTree& tree);

// The node alive at level t whose component of {f >= t} contains x, or
// nullopt when f(x) < t or the component carries no registered mode.
// "Alive" means birth_level <= t < death_level.
std::optional<int> cluster_of(const DensityModel& model, const ClusterTree& tree,
                              const Grid& grid, const Point& x, double t);

}  // namespace modalflow
