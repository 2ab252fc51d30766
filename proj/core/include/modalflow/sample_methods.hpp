#pragma once

#include "modalflow/climb.hpp"
#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/flow.hpp"

#include <cstdint>
#include <vector>

namespace modalflow {

// n independent draws from the mixture (column-major, d x n). Deterministic
// in the seed across platforms.
Matrix sample_mixture(const GaussianMixture& mixture, int n, std::uint64_t seed);

struct MethodControls {
    Box box;                     // clustering domain (grid + connectivity)
    double eta = 0.0;            // level step;   0 = 1e-2 * estimated max density
    double eps = 0.0;            // spatial step; 0 = 2e-2 * box diameter
    int cells_per_axis = 0;      // 0 = per-dimension default
    long max_iterations = 0;     // per climb; 0 = automatic cap
    // segment-probe connectivity in the stop test (no grid labeling); the
    // default favors batch throughput on sample-based densities
    bool cheap_connectivity = true;

    explicit MethodControls(Box domain) : box(std::move(domain)) {}
};

struct ClusterResult {
    std::vector<int> labels;  // per input column; -1 = unassigned
    std::vector<Mode> modes;  // canonical: ids equal positions, assigned in
                              // first-appearance order over the inputs
    long unassigned = 0;
};

// Labels each column of points by the mode its level climb returns
// (level-step / spatial-step variants). Failed climbs leave the point
// unassigned rather than aborting the batch. Deterministic for fixed
// inputs regardless of worker count.
ClusterResult method1_cluster(const DensityModel& model, const Matrix& points,
                              const MethodControls& controls);
ClusterResult method2_cluster(const DensityModel& model, const Matrix& points,
                              const MethodControls& controls);

// Labels each column by the terminal mode of the fixed-step ascent
// x <- x + eps * grad f(x) / f(x).
ClusterResult meanshift_cluster(const DensityModel& model, const Matrix& points,
                                const MethodControls& controls);

// Labels each column by the terminal mode of the exact gradient flow.
ClusterResult flow_cluster(const DensityModel& model, const Matrix& points,
                           const MethodControls& controls);

struct AgreementScore {
    double ari = 0.0;             // adjusted Rand index
    double pair_agreement = 0.0;  // co-clustered-pair match fraction
    long points_compared = 0;     // points assigned in both labelings
};

// Agreement between two labelings of the same points; entries unassigned
// (< 0) on either side are excluded. Degenerate comparisons (fewer than two
// shared points, or both labelings trivial) score 1.
AgreementScore score_agreement(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace modalflow
