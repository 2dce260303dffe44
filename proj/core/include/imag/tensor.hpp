#pragma once

#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace imag {

/// Dense 2-d tensor of 64-bit floats, row-major. Scalars are 1x1 and column
/// vectors are d x 1. Copies share storage; a tensor with a grad buffer
/// participates in differentiation, one without is a constant.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::shared_ptr<std::vector<double>> values;
  std::shared_ptr<std::vector<double>> grad;  // same length as values when present
  int node = -1;                              // tape node id; -1 for leaves

  Tensor() = default;
  Tensor(int r, int c, bool with_grad = false);

  static Tensor zeros(int r, int c, bool with_grad = false);
  static Tensor scalar(double v, bool with_grad = false);
  /// Row-major literal, e.g. Tensor::from({{1,2},{3,4}}).
  static Tensor from(std::initializer_list<std::initializer_list<double>> init,
                     bool with_grad = false);
  static Tensor column(std::initializer_list<double> init, bool with_grad = false);

  int size() const { return rows * cols; }
  // Storage is shared, so a const Tensor still exposes writable elements;
  // const-ness here only freezes the shape and buffer identity.
  double& at(int r, int c) const { return (*values)[static_cast<std::size_t>(r) * cols + c]; }
  double& gat(int r, int c) const { return (*grad)[static_cast<std::size_t>(r) * cols + c]; }

  /// Value of a 1x1 tensor; throws otherwise.
  double item() const;

  bool requires_grad() const { return grad != nullptr; }
  void ensure_grad();
  void zero_grad() const;  // clears the shared buffer, hence const

  /// Shares values but carries no grad buffer and no tape node.
  Tensor detached() const;

  bool same_shape(const Tensor& other) const {
    return rows == other.rows && cols == other.cols;
  }
  std::string shape_str() const;
  bool all_finite() const;
};

}  // namespace imag
