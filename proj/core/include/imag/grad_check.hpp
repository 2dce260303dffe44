#pragma once

#include <functional>
#include <span>
#include <string>

#include "imag/tape.hpp"
#include "imag/tensor.hpp"

namespace imag {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients of build_loss against central finite
/// differences over every element of every listed parameter. The relative
/// error per element is |analytic - numeric| / max(|analytic|, |numeric|, 1e-5).
/// Evaluates the loss twice up front and throws DeterminismError when the
/// two baselines differ.
GradCheckReport finite_difference_check(const std::function<Tensor(Tape&)>& build_loss,
                                        std::span<const NamedParam> params,
                                        double eps = 1e-5);

}  // namespace imag
