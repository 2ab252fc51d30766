#pragma once

#include "modalflow/climb.hpp"
#include "modalflow/cluster_tree.hpp"
#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/flow.hpp"
#include "modalflow/metrics.hpp"
#include "modalflow/sample_methods.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace modalflow {

// Shortest decimal form that round-trips the exact double; used for every
// numeric field so that identical runs serialize byte-identically.
std::string format_double(double v);

// Density specification files:
//   {"type": "mixture", "components": [{"weight": w, "mean": [...], "cov": [[...], ...]}, ...]}
//   {"type": "kde", "sample_file": "points.csv", "bandwidth": h,
//    "truncation_radius_in_h": r}   (bandwidth <= 0 or absent = rule of thumb;
//                                    truncation optional, 0 = off)
// The sample file path is resolved relative to the spec file's directory.
std::unique_ptr<DensityModel> load_density_spec(const std::filesystem::path& file);
void save_mixture_spec(const GaussianMixture& mixture, const std::filesystem::path& file);

// Points CSV: one row per point, comma-separated coordinates, no header.
// Columns of the matrix are points.
Matrix load_points_csv(const std::filesystem::path& file);
void save_points_csv(const Matrix& points, const std::filesystem::path& file);

// Trajectory CSV: header param,level,coord_0[,coord_1,...]
void save_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& file);

// Climb CSV: header step,level,coord_0[,...]; one row per accepted point.
void save_climb_csv(const ClimbResult& result, const std::filesystem::path& file);

// Labeled points CSV: header coord_0[,...],label,mode_level (label -1 =
// unassigned, mode_level nan). Modes are looked up by label index.
void save_labeled_csv(const Matrix& points, const std::vector<int>& labels,
                      const std::vector<Mode>& modes, const std::filesystem::path& file);

// Component labeling CSV: header cell_index_0[,...],label; one row per grid
// cell at or above the labeling's level.
void save_labeling_csv(const ComponentLabeling& labeling, const std::filesystem::path& file);

// Rate study CSV: header step,hausdorff_distance.
void save_rate_csv(const RateReport& report, const std::filesystem::path& file);

// Cluster tree as JSON (nodes with parent/children ids, birth and death
// levels, modes on leaves) and as an indented text rendering.
void save_tree_json(const ClusterTree& tree, const std::filesystem::path& file);
std::string render_tree_text(const ClusterTree& tree);

}  // namespace modalflow
