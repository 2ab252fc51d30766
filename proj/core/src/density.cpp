#include "modalflow/density.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace modalflow {

namespace {

double spectral_norm(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

// --- GaussianMixture --------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    require(!components_.empty(), "GaussianMixture: needs at least one component");
    dim_ = static_cast<int>(components_[0].mean.size());
    require(dim_ >= 1, "GaussianMixture: empty mean");

    double total = 0.0;
    prepared_.reserve(components_.size());
    for (const auto& c : components_) {
        require(c.mean.size() == dim_, "GaussianMixture: mean dimension mismatch");
        require(c.cov.rows() == dim_ && c.cov.cols() == dim_,
                "GaussianMixture: covariance dimension mismatch");
        require(c.weight > 0.0, "GaussianMixture: weights must be positive");
        require_finite(c.mean, "GaussianMixture");
        if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw InputError("GaussianMixture: covariance not symmetric");
        Eigen::LLT<Matrix> llt(c.cov);
        if (llt.info() != Eigen::Success)
            throw InputError("GaussianMixture: covariance not positive definite");
        Prepared p;
        p.chol_l = llt.matrixL();
        p.cov_inv = llt.solve(Matrix::Identity(dim_, dim_));
        const double det_sqrt = p.chol_l.diagonal().prod();
        p.norm = c.weight /
                 (std::pow(2.0 * std::numbers::pi, 0.5 * dim_) * det_sqrt);
        prepared_.push_back(std::move(p));
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InputError("GaussianMixture: weights must sum to 1");
}

void GaussianMixture::check_dim(const Point& x, const char* who) const {
    if (x.size() != dim_) throw InputError(std::string(who) + ": dimension mismatch");
}

double GaussianMixture::eval(const Point& x) const {
    check_dim(x, "GaussianMixture::eval");
    double f = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const Point u = x - components_[i].mean;
        f += prepared_[i].norm *
             std::exp(-0.5 * u.dot(prepared_[i].cov_inv * u));
    }
    return f;
}

Point GaussianMixture::grad(const Point& x) const {
    check_dim(x, "GaussianMixture::grad");
    Point g = Point::Zero(dim_);
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const Point u = x - components_[i].mean;
        const Point su = prepared_[i].cov_inv * u;
        const double p = prepared_[i].norm * std::exp(-0.5 * u.dot(su));
        g -= p * su;
    }
    return g;
}

Matrix GaussianMixture::hessian(const Point& x) const {
    check_dim(x, "GaussianMixture::hessian");
    Matrix h = Matrix::Zero(dim_, dim_);
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const Point u = x - components_[i].mean;
        const Point su = prepared_[i].cov_inv * u;
        const double p = prepared_[i].norm * std::exp(-0.5 * u.dot(su));
        h += p * (su * su.transpose() - prepared_[i].cov_inv);
    }
    return h;
}

void GaussianMixture::eval_all(const Point& x, double& f, Point& g, Matrix& h) const {
    check_dim(x, "GaussianMixture::eval_all");
    f = 0.0;
    g = Point::Zero(dim_);
    h = Matrix::Zero(dim_, dim_);
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const Point u = x - components_[i].mean;
        const Point su = prepared_[i].cov_inv * u;
        const double p = prepared_[i].norm * std::exp(-0.5 * u.dot(su));
        f += p;
        g -= p * su;
        h += p * (su * su.transpose() - prepared_[i].cov_inv);
    }
}

// --- KernelDensity -----------------------------------------------------------

KernelDensity::KernelDensity(std::vector<Point> sample, double bandwidth,
                             double truncation_radius_in_h)
    : h_(bandwidth) {
    require(!sample.empty(), "KernelDensity: empty sample");
    require(bandwidth > 0.0, "KernelDensity: bandwidth must be positive");
    dim_ = static_cast<int>(sample[0].size());
    require(dim_ >= 1, "KernelDensity: empty points");
    data_.resize(dim_, static_cast<Eigen::Index>(sample.size()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        require(sample[i].size() == dim_, "KernelDensity: sample dimension mismatch");
        require_finite(sample[i], "KernelDensity");
        data_.col(static_cast<Eigen::Index>(i)) = sample[i];
    }
    if (truncation_radius_in_h > 0.0)
        trunc_sq_ = truncation_radius_in_h * truncation_radius_in_h;
    norm_ = 1.0 / (static_cast<double>(data_.cols()) *
                   std::pow(2.0 * std::numbers::pi * h_ * h_, 0.5 * dim_));
}

void KernelDensity::check_dim(const Point& x, const char* who) const {
    if (x.size() != dim_) throw InputError(std::string(who) + ": dimension mismatch");
}

struct KernelDensity::Scratch {
    Eigen::ArrayXd w;  // per-kernel weights
    Matrix u;          // offsets x_i - x
};

// Fills the calling thread's workspace with w_i = norm * exp(-|x_i - x|^2 /
// (2 h^2)) and u_i = x_i - x. Thread-local so concurrent evaluations of a
// shared estimate do not interfere.
KernelDensity::Scratch& KernelDensity::kernel_weights(const Point& x) const {
    static thread_local Scratch s;
    s.u = data_.colwise() - x;
    const Eigen::ArrayXd q = s.u.colwise().squaredNorm().array() / (h_ * h_);
    if (trunc_sq_ > 0.0)
        s.w = (q <= trunc_sq_).select((-0.5 * q).exp() * norm_, 0.0);
    else
        s.w = (-0.5 * q).exp() * norm_;
    return s;
}

double KernelDensity::eval(const Point& x) const {
    check_dim(x, "KernelDensity::eval");
    return kernel_weights(x).w.sum();
}

Point KernelDensity::grad(const Point& x) const {
    check_dim(x, "KernelDensity::grad");
    const Scratch& s = kernel_weights(x);
    return (s.u * s.w.matrix()) / (h_ * h_);
}

Matrix KernelDensity::hessian(const Point& x) const {
    check_dim(x, "KernelDensity::hessian");
    const Scratch& s = kernel_weights(x);
    const double h2 = h_ * h_;
    const Matrix uw = s.u.array().rowwise() * s.w.transpose();
    Matrix h = (uw * s.u.transpose()) / (h2 * h2);
    h.diagonal().array() -= s.w.sum() / h2;
    return h;
}

void KernelDensity::eval_all(const Point& x, double& f, Point& g, Matrix& h) const {
    check_dim(x, "KernelDensity::eval_all");
    const Scratch& s = kernel_weights(x);
    const double h2 = h_ * h_;
    f = s.w.sum();
    g = (s.u * s.w.matrix()) / h2;
    const Matrix uw = s.u.array().rowwise() * s.w.transpose();
    h = (uw * s.u.transpose()) / (h2 * h2);
    h.diagonal().array() -= f / h2;
}

Box KernelDensity::sample_bounding_box() const {
    return Box(data_.rowwise().minCoeff(), data_.rowwise().maxCoeff());
}

std::unique_ptr<KernelDensity> kde_fit(const std::vector<Point>& sample,
                                       double bandwidth) {
    require(!sample.empty(), "kde_fit: empty sample");
    const double h = bandwidth > 0.0 ? bandwidth : rule_of_thumb_bandwidth(sample);
    return std::make_unique<KernelDensity>(sample, h);
}

double rule_of_thumb_bandwidth(const std::vector<Point>& sample) {
    require(!sample.empty(), "rule_of_thumb_bandwidth: empty sample");
    const int d = static_cast<int>(sample[0].size());
    const auto n = static_cast<double>(sample.size());
    Point mean = Point::Zero(d);
    for (const auto& x : sample) mean += x;
    mean /= n;
    Point var = Point::Zero(d);
    for (const auto& x : sample) var += (x - mean).cwiseAbs2();
    var /= std::max(n - 1.0, 1.0);
    const double avg_sd = var.cwiseSqrt().mean();
    require(avg_sd > 0.0, "rule_of_thumb_bandwidth: degenerate sample");
    return std::pow(n, -1.0 / (d + 4)) * avg_sd;
}

// --- bounds ------------------------------------------------------------------

DensityBounds estimate_bounds(const DensityModel& model, const Box& box,
                              int grid_points_per_axis) {
    require(grid_points_per_axis >= 2, "estimate_bounds: need >= 2 points per axis");
    require(box.dim() == model.dim(), "estimate_bounds: box dimension mismatch");
    const int d = box.dim();
    const int n = grid_points_per_axis;

    std::vector<int> idx(d, 0);
    Point x(d);
    DensityBounds b;
    double f;
    Point g(d);
    Matrix h(d, d);
    for (;;) {
        for (int a = 0; a < d; ++a)
            x[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * idx[a] / (n - 1);
        model.eval_all(x, f, g, h);
        b.fmax = std::max(b.fmax, f);
        b.kappa1 = std::max(b.kappa1, g.norm());
        b.kappa2 = std::max(b.kappa2, spectral_norm(h));
        int a = 0;
        while (a < d && ++idx[a] == n) idx[a++] = 0;
        if (a == d) break;
    }
    return b;
}

}  // namespace modalflow
