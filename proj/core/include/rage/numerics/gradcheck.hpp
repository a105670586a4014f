#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "rage/numerics/graph.hpp"

namespace rage::numerics {

struct GradCheckReport {
  double max_error = 0.0;  // max |analytic - fd| / max(1, |fd|)
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Compares reverse-mode gradients of the scalar built by `build_loss` against
// central differences with step h, over every entry of every trainable
// parameter in `params`. Parameter gradients are zeroed before and after.
GradCheckReport check_gradients(ParameterSet<double>& params,
                                const std::function<Var(Graph<double>&)>& build_loss, double h = 1e-5);

}  // namespace rage::numerics
