#pragma once

#include "modalflow/common.hpp"

#include <memory>
#include <vector>

namespace modalflow {

// Smooth probability density on R^d with analytic first and second
// derivatives. Implementations are immutable after construction and safe to
// share across threads.
class DensityModel {
public:
    virtual ~DensityModel() = default;

    virtual int dim() const = 0;
    virtual double eval(const Point& x) const = 0;
    virtual Point grad(const Point& x) const = 0;
    virtual Matrix hessian(const Point& x) const = 0;

    // Value, gradient and Hessian in one pass. The default forwards to the
    // three virtuals; mixture-type models override to share exponentials.
    virtual void eval_all(const Point& x, double& f, Point& g, Matrix& h) const {
        f = eval(x);
        g = grad(x);
        h = hessian(x);
    }
};

struct MixtureComponent {
    double weight = 0.0;
    Point mean;
    Matrix cov;
};

// Finite Gaussian mixture. Weights must sum to 1 (within 1e-12); every
// covariance must be symmetric positive definite.
class GaussianMixture final : public DensityModel {
public:
    explicit GaussianMixture(std::vector<MixtureComponent> components);

    int dim() const override { return dim_; }
    double eval(const Point& x) const override;
    Point grad(const Point& x) const override;
    Matrix hessian(const Point& x) const override;
    void eval_all(const Point& x, double& f, Point& g, Matrix& h) const override;

    const std::vector<MixtureComponent>& components() const { return components_; }

private:
    struct Prepared {
        Matrix cov_inv;
        Matrix chol_l;     // lower Cholesky factor of cov
        double norm = 0.0; // weight / ((2*pi)^(d/2) * sqrt(det cov))
    };

    void check_dim(const Point& x, const char* who) const;

    std::vector<MixtureComponent> components_;
    std::vector<Prepared> prepared_;
    int dim_ = 0;

    friend class SampleDraw;
};

// Gaussian kernel density estimate with isotropic bandwidth h:
//   f(x) = (1/n) sum_i N(x; x_i, h^2 I).
// Evaluation is O(n); an optional truncation radius (in units of h) skips
// kernels beyond that distance. Truncation is off by default because it
// introduces tiny derivative discontinuities; it is a speed knob only.
class KernelDensity final : public DensityModel {
public:
    KernelDensity(std::vector<Point> sample, double bandwidth,
                  double truncation_radius_in_h = 0.0);

    int dim() const override { return dim_; }
    double eval(const Point& x) const override;
    Point grad(const Point& x) const override;
    Matrix hessian(const Point& x) const override;
    void eval_all(const Point& x, double& f, Point& g, Matrix& h) const override;

    double bandwidth() const { return h_; }
    int sample_size() const { return static_cast<int>(data_.cols()); }
    Box sample_bounding_box() const;

private:
    struct Scratch;  // per-thread evaluation workspace

    void check_dim(const Point& x, const char* who) const;
    Scratch& kernel_weights(const Point& x) const;

    Matrix data_;  // d x n
    double h_ = 0.0;
    double trunc_sq_ = 0.0;  // squared cutoff in squared h units, 0 = off
    double norm_ = 0.0;      // 1 / (n * (2*pi*h^2)^(d/2))
    int dim_ = 0;
};

// KDE from a sample; bandwidth <= 0 selects the rule-of-thumb value
// n^(-1/(d+4)) * (average per-axis standard deviation).
std::unique_ptr<KernelDensity> kde_fit(const std::vector<Point>& sample,
                                       double bandwidth = 0.0);

double rule_of_thumb_bandwidth(const std::vector<Point>& sample);

// Grid-estimated regularity data for a model over a box:
//   kappa1 = max |grad f|, kappa2 = max |hess f|_2, fmax = max f.
struct DensityBounds {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double fmax = 0.0;
};

DensityBounds estimate_bounds(const DensityModel& model, const Box& box,
                              int grid_points_per_axis = 201);

}  // namespace modalflow
