#include "modalflow/sample_methods.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>

#include "modalflow/parallel.hpp"
#include "modalflow/rng.hpp"

namespace modalflow {

// Sampling needs the component Cholesky factors prepared by the mixture.
class SampleDraw {
public:
    static Matrix draw(const GaussianMixture& mixture, int n, std::uint64_t seed) {
        require(n > 0, "sample_mixture: sample size must be positive");
        const int d = mixture.dim();
        const auto& components = mixture.components_;
        Eigen::VectorXd weights(static_cast<Eigen::Index>(components.size()));
        for (std::size_t k = 0; k < components.size(); ++k)
            weights[static_cast<Eigen::Index>(k)] = components[k].weight;

        Rng rng(seed);
        Matrix out(d, n);
        for (int j = 0; j < n; ++j) {
            const int k = rng.categorical(weights);
            out.col(j) = components[static_cast<std::size_t>(k)].mean +
                         mixture.prepared_[static_cast<std::size_t>(k)].chol_l *
                             rng.normal_vector(d);
        }
        return out;
    }
};

Matrix sample_mixture(const GaussianMixture& mixture, int n, std::uint64_t seed) {
    return SampleDraw::draw(mixture, n, seed);
}

// --- batch clustering --------------------------------------------------------

namespace {

struct Outcome {
    bool has_mode = false;
    Point location;
    double level = 0.0;
};

// Sequential input-order fold: ids and stored mode locations depend only on
// the outcomes, never on worker scheduling.
ClusterResult fold_outcomes(const std::vector<Outcome>& outcomes, double merge_radius) {
    ClusterResult result;
    result.labels.assign(outcomes.size(), -1);
    ModeRegistry master(merge_radius);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].has_mode) {
            ++result.unassigned;
            continue;
        }
        result.labels[i] = master.match_or_register(outcomes[i].location, outcomes[i].level).id;
    }
    result.modes = master.modes();
    return result;
}

struct BatchSetup {
    ClimbContext base;
    double eta;
    double eps;
};

BatchSetup make_setup(const DensityModel& model, const Matrix& points,
                      const MethodControls& controls) {
    require(points.rows() == model.dim(), "cluster batch: point dimension mismatch");
    require(points.cols() >= 1, "cluster batch: empty batch");
    require(controls.box.dim() == model.dim(), "cluster batch: box dimension mismatch");
    const int cells = controls.cells_per_axis > 0
                          ? controls.cells_per_axis
                          : Grid::default_cells_per_axis(model.dim());
    ClimbContext base(model, Grid(controls.box, cells));
    base.cheap_connectivity = controls.cheap_connectivity;
    const double eta = controls.eta > 0.0 ? controls.eta : 1e-2 * base.bounds().fmax;
    const double eps = controls.eps > 0.0 ? controls.eps : 2e-2 * controls.box.diameter();
    return {std::move(base), eta, eps};
}

template <typename RunOne>
ClusterResult cluster_batch(const DensityModel& model, const Matrix& points,
                            const MethodControls& controls, RunOne&& run_one) {
    const BatchSetup setup = make_setup(model, points, controls);
    std::vector<Outcome> outcomes(static_cast<std::size_t>(points.cols()));
    parallel_for(static_cast<std::size_t>(points.cols()), [&](std::size_t i) {
        const Point x = points.col(static_cast<Eigen::Index>(i));
        try {
            outcomes[i] = run_one(setup, x);
        } catch (const InputError&) {
            // e.g. density underflow at an extreme outlier: leave unassigned
        } catch (const StepFailedError&) {
        }
    });
    return fold_outcomes(outcomes, 1e-4 * controls.box.diameter());
}

Outcome outcome_from_mode(const std::optional<Mode>& mode) {
    if (!mode) return {};
    return {true, mode->location, mode->level};
}

Outcome outcome_from_terminal(const DensityModel& model, const TerminalInfo& terminal) {
    if (terminal.kind != TerminalKind::mode) return {};
    const Point loc = newton_polish_mode(model, terminal.point);
    return {true, loc, model.eval(loc)};
}

}  // namespace

ClusterResult method1_cluster(const DensityModel& model, const Matrix& points,
                              const MethodControls& controls) {
    return cluster_batch(model, points, controls, [](const BatchSetup& setup, const Point& x) {
        ClimbConfig config;
        config.eta = setup.eta;
        const ClimbContext ctx = setup.base.isolated();
        return outcome_from_mode(climb_alg1(ctx, x, config).returned_mode);
    });
}

ClusterResult method2_cluster(const DensityModel& model, const Matrix& points,
                              const MethodControls& controls) {
    return cluster_batch(model, points, controls, [](const BatchSetup& setup, const Point& x) {
        ClimbConfig config;
        config.eps = setup.eps;
        const ClimbContext ctx = setup.base.isolated();
        return outcome_from_mode(climb_alg2(ctx, x, config).returned_mode);
    });
}

ClusterResult meanshift_cluster(const DensityModel& model, const Matrix& points,
                                const MethodControls& controls) {
    const long max_iterations = controls.max_iterations;
    return cluster_batch(model, points, controls,
                         [&model, max_iterations](const BatchSetup& setup, const Point& x) {
                             const Trajectory tr = forward_euler_ms(model, x, setup.eps,
                                                                    setup.base.flow(),
                                                                    max_iterations);
                             return outcome_from_terminal(model, tr.terminal);
                         });
}

ClusterResult flow_cluster(const DensityModel& model, const Matrix& points,
                           const MethodControls& controls) {
    return cluster_batch(model, points, controls,
                         [&model](const BatchSetup& setup, const Point& x) {
                             const Trajectory tr =
                                 integrate_gamma(model, x, setup.base.flow());
                             return outcome_from_terminal(model, tr.terminal);
                         });
}

// --- agreement scoring -------------------------------------------------------

namespace {

double comb2(long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

AgreementScore score_agreement(const std::vector<int>& a, const std::vector<int>& b) {
    require(a.size() == b.size(), "score_agreement: size mismatch");

    std::map<std::pair<int, int>, long> joint;
    std::map<int, long> in_a, in_b;
    long m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || b[i] < 0) continue;
        ++m;
        ++joint[{a[i], b[i]}];
        ++in_a[a[i]];
        ++in_b[b[i]];
    }

    AgreementScore score;
    score.points_compared = m;
    if (m < 2) {
        score.ari = 1.0;
        score.pair_agreement = 1.0;
        return score;
    }

    double t11 = 0.0, ta = 0.0, tb = 0.0;
    for (const auto& [key, count] : joint) t11 += comb2(count);
    for (const auto& [key, count] : in_a) ta += comb2(count);
    for (const auto& [key, count] : in_b) tb += comb2(count);
    const double total = comb2(m);

    const double expected = ta * tb / total;
    const double upper = 0.5 * (ta + tb);
    const double denom = upper - expected;
    score.ari = std::abs(denom) <= 1e-12 * std::max(1.0, upper) ? 1.0
                                                                : (t11 - expected) / denom;
    score.pair_agreement = (t11 + (total - ta - tb + t11)) / total;
    return score;
}

}  // namespace modalflow
