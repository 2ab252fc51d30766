#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <unordered_set>

#include "modalflow/cluster_tree.hpp"
#include "modalflow/fixtures.hpp"
#include "modalflow/flow.hpp"
#include "modalflow/levelset.hpp"

using namespace modalflow;

namespace {

Point p1(double x) {
    Point p(1);
    p[0] = x;
    return p;
}

Point p2(double x, double y) {
    Point p(2);
    p[0] = x;
    p[1] = y;
    return p;
}

int alive_at(const ClusterTree& tree, double t) {
    int n = 0;
    for (const auto& node : tree.nodes)
        if (node.birth_level <= t && t < node.death_level) ++n;
    return n;
}

double sweep_step(const ClusterTree& tree) {
    REQUIRE(tree.levels.size() >= 2);
    return tree.levels[0] - tree.levels[1];
}

constexpr double kMix1SaddleLevel = 0.086277318826511514;
constexpr double kMix1ModeLevel = 0.19991347655855365;
constexpr double kMix2SaddleLevel = 0.058779983950417324;
constexpr double kMix2ModeLevelA = 0.081427602005827561;
constexpr double kMix2ModeLevelB = 0.092448014365318451;

}  // namespace

TEST_CASE("a unimodal density yields a single root leaf") {
    const auto fx = fixture_by_name("d_gauss1");
    Grid grid(fx->box, Grid::default_cells_per_axis(1));
    const ClusterTree tree = build_cluster_tree(*fx->density, grid);
    REQUIRE(tree.nodes.size() == 1);
    REQUIRE(tree.roots.size() == 1);
    const TreeNode& root = tree.node(tree.roots[0]);
    CHECK(root.is_leaf());
    REQUIRE(root.mode.has_value());
    CHECK(std::abs(root.mode->location[0]) <= 1e-6);
    CHECK(root.death_level == doctest::Approx(0.39894228040143268).epsilon(1e-10));
    CHECK(root.birth_level == doctest::Approx(tree.level_floor).epsilon(1e-12));
}

TEST_CASE("two-bump line density splits at the valley level") {
    const auto fx = fixture_by_name("d_mix1");
    Grid grid(fx->box, Grid::default_cells_per_axis(1));
    const ClusterTree tree = build_cluster_tree(*fx->density, grid);
    const std::vector<int> leaves = leaf_clusters(tree);
    REQUIRE(leaves.size() == 2);
    REQUIRE(tree.roots.size() == 1);
    const TreeNode& root = tree.node(tree.roots[0]);
    REQUIRE(root.children.size() == 2);

    // the split is bracketed to one sweep step around the true valley level
    CHECK(std::abs(root.death_level - kMix1SaddleLevel) <= sweep_step(tree));

    // both peaks have the same height; each leaf dies at it
    for (const int id : leaves) {
        const TreeNode& leaf = tree.node(id);
        REQUIRE(leaf.mode.has_value());
        CHECK(leaf.death_level == doctest::Approx(kMix1ModeLevel).epsilon(1e-10));
        CHECK(leaf.birth_level == doctest::Approx(root.death_level).epsilon(1e-12));
    }
    const double m0 = tree.node(leaves[0]).mode->location[0];
    const double m1 = tree.node(leaves[1]).mode->location[0];
    CHECK(std::abs(std::min(m0, m1) - 0.0078518874062668198) <= 1e-6);
    CHECK(std::abs(std::max(m0, m1) - 3.4921481125937332) <= 1e-6);

    // component count profile across the split: one below, two above
    CHECK(alive_at(tree, 0.04) == 1);
    CHECK(alive_at(tree, 0.15) == 2);
}

TEST_CASE("plane mixture profile counts one, two, one across the bands") {
    const auto fx = fixture_by_name("d_mix2");
    Grid grid(fx->box, Grid::default_cells_per_axis(2));
    const ClusterTree tree = build_cluster_tree(*fx->density, grid);
    REQUIRE(leaf_clusters(tree).size() == 2);
    REQUIRE(tree.roots.size() == 1);
    const TreeNode& root = tree.node(tree.roots[0]);
    CHECK(std::abs(root.death_level - kMix2SaddleLevel) <= sweep_step(tree));

    CHECK(alive_at(tree, 0.03) == 1);   // below the valley: one component
    CHECK(alive_at(tree, 0.07) == 2);   // between valley and lower peak
    CHECK(alive_at(tree, 0.085) == 1);  // between the two peak heights

    // leaf deaths are the two peak heights
    std::vector<double> deaths;
    for (const int id : leaf_clusters(tree)) deaths.push_back(tree.node(id).death_level);
    std::sort(deaths.begin(), deaths.end());
    CHECK(deaths[0] == doctest::Approx(kMix2ModeLevelA).epsilon(1e-9));
    CHECK(deaths[1] == doctest::Approx(kMix2ModeLevelB).epsilon(1e-9));
}

TEST_CASE("node invariants hold on every fixture tree") {
    for (const std::string& name : fixture_names()) {
        const auto fx = fixture_by_name(name);
        Grid grid(fx->box, Grid::default_cells_per_axis(fx->box.dim()));
        const ClusterTree tree = build_cluster_tree(*fx->density, grid);
        const double step = sweep_step(tree);
        REQUIRE(!tree.nodes.empty());
        for (const auto& node : tree.nodes) {
            CHECK(node.id == static_cast<int>(&node - tree.nodes.data()));
            CHECK(node.birth_level < node.death_level);
            CHECK(!node.representative_cells.empty());
            for (const std::int64_t c : node.representative_cells)
                CHECK(fx->density->eval(grid.cell_center(c)) >= node.birth_level - step);
            if (node.parent >= 0) {
                const TreeNode& par = tree.node(node.parent);
                CHECK(par.birth_level < node.birth_level);
                CHECK(std::abs(par.death_level - node.birth_level) <= step);
                const auto& pc = par.children;
                CHECK(std::find(pc.begin(), pc.end(), node.id) != pc.end());
                // nesting: the child's cells sit inside the parent's component
                std::unordered_set<std::int64_t> parent_cells(
                    par.representative_cells.begin(), par.representative_cells.end());
                for (const std::int64_t c : node.representative_cells)
                    CHECK(parent_cells.count(c) == 1);
            } else {
                const auto& r = tree.roots;
                CHECK(std::find(r.begin(), r.end(), node.id) != r.end());
            }
            if (node.is_leaf()) {
                REQUIRE(node.mode.has_value());
                CHECK(node.death_level == doctest::Approx(node.mode->level).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("leaf count matches the number of gradient-flow basins") {
    for (const std::string& name : fixture_names()) {
        const auto fx = fixture_by_name(name);
        const DensityModel& m = *fx->density;
        Grid grid(fx->box, Grid::default_cells_per_axis(fx->box.dim()));
        const ClusterTree tree = build_cluster_tree(*fx->density, grid);

        const DensityBounds bounds = estimate_bounds(m, fx->box);
        const FlowControls controls = FlowControls::defaults_for(bounds, fx->box);
        ModeRegistry registry(1e-4 * fx->box.diameter());
        const int per_axis = 9;
        std::vector<int> idx(static_cast<std::size_t>(m.dim()), 0);
        bool carry = false;
        while (!carry) {
            Point x(m.dim());
            for (int a = 0; a < m.dim(); ++a)
                x[a] = fx->box.lo[a] +
                       (fx->box.hi[a] - fx->box.lo[a]) * (idx[a] + 0.5) / per_axis;
            if (m.eval(x) > 0.05 * bounds.fmax) assign_basin(m, x, controls, registry);
            int a = 0;
            for (; a < m.dim(); ++a) {
                if (++idx[a] < per_axis) break;
                idx[a] = 0;
            }
            carry = (a == m.dim());
        }
        CHECK(leaf_clusters(tree).size() == registry.size());
    }
}

TEST_CASE("membership queries climb to the node alive at the level") {
    const auto fx = fixture_by_name("d_mix1");
    const DensityModel& m = *fx->density;
    Grid grid(fx->box, Grid::default_cells_per_axis(1));
    const ClusterTree tree = build_cluster_tree(m, grid);
    const std::vector<int> leaves = leaf_clusters(tree);
    REQUIRE(leaves.size() == 2);
    REQUIRE(tree.node(leaves[0]).mode.has_value());
    REQUIRE(tree.node(leaves[1]).mode.has_value());

    // just below a peak, at a level above the valley: the leaf itself
    const TreeNode& left_leaf =
        tree.node(tree.node(leaves[0]).mode->location[0] <
                          tree.node(leaves[1]).mode->location[0]
                      ? leaves[0]
                      : leaves[1]);
    const auto at_leaf = cluster_of(m, tree, grid, left_leaf.mode->location, 0.15);
    REQUIRE(at_leaf.has_value());
    CHECK(*at_leaf == left_leaf.id);

    // between the bumps at a level below the valley: the root
    const auto at_root = cluster_of(m, tree, grid, p1(1.5), 0.04);
    REQUIRE(at_root.has_value());
    CHECK(*at_root == tree.roots[0]);

    // below the point's own level: no component contains it
    CHECK(!cluster_of(m, tree, grid, p1(1.5), 0.15).has_value());
}

TEST_CASE("component radius shrinks like the square root of the level gap") {
    // for the rotation-invariant plane gaussian the component of {f >= t} is
    // a disc of radius sqrt(-2 log(2 pi t)); test the tree's birth/death
    // interval against two closed-form radii
    const auto fx = fixture_by_name("d_gauss2");
    const DensityModel& m = *fx->density;
    Grid grid(fx->box, Grid::default_cells_per_axis(2));
    const ClusterTree tree = build_cluster_tree(m, grid);
    REQUIRE(tree.nodes.size() == 1);
    const double fmax = 0.15915494309189534;
    for (const double t : {0.9 * fmax, 0.5 * fmax}) {
        const double radius = std::sqrt(-2.0 * std::log(2.0 * M_PI * t));
        const ComponentLabeling lab = label_components(m, t, grid);
        REQUIRE(lab.component_count() == 1);
        double max_r = 0.0;
        for (const std::int64_t c : lab.cells_with_label(0))
            max_r = std::max(max_r, grid.cell_center(c).norm());
        // cell centers inside the disc, no farther than one cell diagonal out
        CHECK(max_r <= radius + std::sqrt(2.0) * grid.max_cell_width());
        CHECK(max_r >= radius - std::sqrt(2.0) * grid.max_cell_width());
    }
}

TEST_CASE("construction rejects bad grids and level counts") {
    const auto fx = fixture_by_name("d_gauss1");
    Grid tight(Box(p1(-1.0), p1(1.0)), 32);
    CHECK_THROWS_AS(build_cluster_tree(*fx->density, tight), GridTooSmallError);
    Grid grid(fx->box, 64);
    CHECK_THROWS_AS(build_cluster_tree(*fx->density, grid, 4), InputError);
    CHECK_THROWS_AS(build_cluster_tree(*fx->density, grid, 256, 10.0), InputError);
}
