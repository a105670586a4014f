#include "rage/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rage::numerics {

namespace {

double evaluate(const std::function<Var(Graph<double>&)>& build_loss) {
  Graph<double> g(false);
  return g.value(build_loss(g))[0];
}

}  // namespace

GradCheckReport check_gradients(ParameterSet<double>& params,
                                const std::function<Var(Graph<double>&)>& build_loss, double h) {
  params.zero_grads();
  {
    Graph<double> g;
    g.backward(build_loss(g));
  }
  GradCheckReport report;
  for (auto& p : params) {
    if (!p->trainable) continue;
    const std::vector<double> analytic(p->tensor.grad().begin(), p->tensor.grad().end());
    for (std::size_t i = 0; i < p->tensor.size(); ++i) {
      const double saved = p->tensor[i];
      p->tensor[i] = saved + h;
      const double up = evaluate(build_loss);
      p->tensor[i] = saved - h;
      const double down = evaluate(build_loss);
      p->tensor[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
      ++report.checked;
      if (err > report.max_error || report.worst_parameter.empty()) {
        report.max_error = err;
        report.worst_parameter = p->name;
        report.worst_index = i;
      }
    }
  }
  params.zero_grads();
  return report;
}

}  // namespace rage::numerics
