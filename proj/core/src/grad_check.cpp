#include "imag/grad_check.hpp"

#include <cmath>
#include <vector>

#include "imag/error.hpp"

namespace imag {

GradCheckReport finite_difference_check(const std::function<Tensor(Tape&)>& build_loss,
                                        std::span<const NamedParam> params,
                                        double eps) {
  const auto eval = [&build_loss] {
    Tape tape;
    return build_loss(tape).item();
  };

  const double base1 = eval();
  const double base2 = eval();
  if (base1 != base2)
    throw DeterminismError("finite_difference_check: two baseline evaluations differ (" +
                           std::to_string(base1) + " vs " + std::to_string(base2) + ")");

  for (const NamedParam& p : params) {
    if (!p.tensor.requires_grad())
      throw ConfigError("finite_difference_check: parameter '" + p.name + "' has no grad buffer");
    p.tensor.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = build_loss(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const NamedParam& p : params) analytic.push_back(*p.tensor.grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    std::vector<double>& vals = *params[pi].tensor.values;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + eps;
      const double fp = eval();
      vals[i] = saved - eps;
      const double fm = eval();
      vals[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      // The 1e-5 floor keeps round-off noise in the central difference
      // (about 1e-10 per element at eps 1e-5 on an O(1) loss) well below the
      // usual 1e-4 tolerance while still flagging any missing gradient path
      // of magnitude 1e-5 or more with an error near 1.
      const double rel =
          std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-5});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name + "[" + std::to_string(i) + "]";
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace imag
