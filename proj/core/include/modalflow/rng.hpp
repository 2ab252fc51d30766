#pragma once

#include "modalflow/common.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace modalflow {

// Deterministic RNG helpers. mt19937_64 output is fully specified by the
// standard; the transformations below are fixed formulas, so identical
// seeds give identical streams on any platform (std::*_distribution would
// not guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Marsaglia polar method
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    Point normal_vector(int dim) {
        Point z(dim);
        for (int i = 0; i < dim; ++i) z[i] = normal();
        return z;
    }

    Point uniform_in_box(const Box& box) {
        Point x(box.dim());
        for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
        return x;
    }

    // uniform direction on the unit sphere
    Point direction(int dim) {
        Point z;
        double n;
        do {
            z = normal_vector(dim);
            n = z.norm();
        } while (n < 1e-12);
        return z / n;
    }

    // index drawn from a normalized weight vector by CDF inversion
    int categorical(const Eigen::VectorXd& weights) {
        const double u = uniform();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // stable derived stream for per-item work inside batches
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace modalflow
