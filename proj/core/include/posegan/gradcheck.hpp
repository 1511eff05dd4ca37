#pragma once

#include <functional>
#include <string>
#include <vector>

#include "posegan/autograd.hpp"

namespace posegan {

// Central-difference verification harness (double precision). `build` must
// reconstruct the scalar loss from the current leaf values on every call;
// every differentiable leaf (parameters and inputs) is perturbed element by
// element (evenly subsampled above max_elems_per_leaf). Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
double finite_diff_max_rel_error(const std::function<nn::NodePtr()>& build,
                                 const std::vector<nn::NodePtr>& leaves, double eps,
                                 long max_elems_per_leaf = 1024);

// Named tiny-instance checks covering every differentiable component:
// attention blocks, AdaIN, both discriminators with their GAN objectives,
// the five losses, both re-ID heads and the three encoders.
std::vector<std::string> gradcheck_component_names();

// Max relative error for one component; throws ParamError for unknown names.
double gradcheck_component(const std::string& name, double eps);

struct GradCheckReport {
    std::string component;
    double max_rel_error = 0;
};
std::vector<GradCheckReport> gradcheck_all(double eps);

} // namespace posegan
