#include "modalflow/fixtures.hpp"

namespace modalflow {

namespace {

Point vec1(double a) {
    Point p(1);
    p << a;
    return p;
}

Point vec2(double a, double b) {
    Point p(2);
    p << a, b;
    return p;
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Fixture make(std::string name, std::vector<MixtureComponent> components, Box box) {
    return {std::move(name), std::make_shared<GaussianMixture>(std::move(components)),
            std::move(box)};
}

}  // namespace

Fixture d_gauss1() {
    return make("d_gauss1", {{1.0, vec1(0.0), Matrix::Identity(1, 1)}},
                Box(vec1(-4.5), vec1(4.5)));
}

Fixture d_gauss2() {
    return make("d_gauss2", {{1.0, vec2(0.0, 0.0), Matrix::Identity(2, 2)}},
                Box(vec2(-4.5, -4.5), vec2(4.5, 4.5)));
}

Fixture d_mix1() {
    return make("d_mix1",
                {{0.5, vec1(0.0), Matrix::Identity(1, 1)},
                 {0.5, vec1(3.5), Matrix::Identity(1, 1)}},
                Box(vec1(-4.5), vec1(8.0)));
}

Fixture d_mix2() {
    return make("d_mix2",
                {{0.5, vec2(0.0, 0.0), Matrix::Identity(2, 2)},
                 {0.5, vec2(3.0, 1.0), diag2(1.5, 0.5)}},
                Box(vec2(-4.5, -4.5), vec2(9.0, 5.5)));
}

std::vector<std::string> fixture_names() {
    return {"d_gauss1", "d_gauss2", "d_mix1", "d_mix2"};
}

std::optional<Fixture> fixture_by_name(const std::string& name) {
    if (name == "d_gauss1") return d_gauss1();
    if (name == "d_gauss2") return d_gauss2();
    if (name == "d_mix1") return d_mix1();
    if (name == "d_mix2") return d_mix2();
    return std::nullopt;
}

}  // namespace modalflow
