#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace modalflow {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown for violated argument contracts: dimension mismatches, bad
// parameter ranges, malformed inputs.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Grid does not cover the effective support at the requested level: the
// outermost cell shell still carries density >= t.
class GridTooSmallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Newton projection onto a level set failed to converge; carries the last
// iterate so callers can decide whether the failure is a legitimate stop.
class ProjectionFailedError : public std::runtime_error {
public:
    ProjectionFailedError(const std::string& what, Point last)
        : std::runtime_error(what), last_iterate(std::move(last)) {}
    Point last_iterate;
};

// argmax_on_component could not produce a mode (all starts stalled).
class ArgmaxFailedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An implicit step (backward Euler) failed to converge.
class StepFailedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Axis-aligned box; the working domain for grids, bound estimation and
// random sampling.
struct Box {
    Point lo;
    Point hi;

    Box() = default;
    Box(Point lo_, Point hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size() || lo.size() == 0)
            throw InputError("Box: lo/hi dimension mismatch");
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw InputError("Box: lo must be < hi on every axis");
    }

    int dim() const { return static_cast<int>(lo.size()); }
    double diameter() const { return (hi - lo).norm(); }
    bool contains(const Point& x) const {
        if (x.size() != lo.size()) return false;
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw InputError(msg);
}

inline void require_finite(const Point& x, const char* who) {
    if (!x.allFinite()) throw InputError(std::string(who) + ": non-finite coordinates");
}

}  // namespace modalflow
