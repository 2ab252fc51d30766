#pragma once

#include "modalflow/common.hpp"
#include "modalflow/density.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace modalflow {

// A canonical density with its working box. The box covers the effective
// support: the density on the boundary shell sits below every level the
// grid machinery is asked to resolve.
struct Fixture {
    std::string name;
    std::shared_ptr<const GaussianMixture> density;
    Box box;
};

Fixture d_gauss1();  // standard normal, d = 1
Fixture d_gauss2();  // standard normal, d = 2
Fixture d_mix1();    // 0.5 N(0,1) + 0.5 N(3.5,1)
Fixture d_mix2();    // 0.5 N((0,0),I) + 0.5 N((3,1),diag(1.5,0.5))

std::vector<std::string> fixture_names();
std::optional<Fixture> fixture_by_name(const std::string& name);

}  // namespace modalflow
