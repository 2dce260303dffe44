#include "imag/tensor.hpp"

#include <cmath>

#include "imag/error.hpp"

namespace imag {

Tensor::Tensor(int r, int c, bool with_grad) : rows(r), cols(c) {
  if (r <= 0 || c <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str());
  values = std::make_shared<std::vector<double>>(static_cast<std::size_t>(r) * c, 0.0);
  if (with_grad) grad = std::make_shared<std::vector<double>>(values->size(), 0.0);
}

Tensor Tensor::zeros(int r, int c, bool with_grad) { return Tensor(r, c, with_grad); }

Tensor Tensor::scalar(double v, bool with_grad) {
  Tensor t(1, 1, with_grad);
  (*t.values)[0] = v;
  return t;
}

Tensor Tensor::from(std::initializer_list<std::initializer_list<double>> init, bool with_grad) {
  const int r = static_cast<int>(init.size());
  const int c = static_cast<int>(init.begin()->size());
  Tensor t(r, c, with_grad);
  int i = 0;
  for (const auto& row : init) {
    if (static_cast<int>(row.size()) != c)
      throw ShapeError("ragged initializer for tensor literal");
    int j = 0;
    for (double v : row) t.at(i, j++) = v;
    ++i;
  }
  return t;
}

Tensor Tensor::column(std::initializer_list<double> init, bool with_grad) {
  Tensor t(static_cast<int>(init.size()), 1, with_grad);
  int i = 0;
  for (double v : init) t.at(i++, 0) = v;
  return t;
}

double Tensor::item() const {
  if (rows != 1 || cols != 1)
    throw ShapeError("item() requires a 1x1 tensor, got " + shape_str());
  return (*values)[0];
}

void Tensor::ensure_grad() {
  if (!grad) grad = std::make_shared<std::vector<double>>(values->size(), 0.0);
}

void Tensor::zero_grad() const {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

Tensor Tensor::detached() const {
  Tensor t;
  t.rows = rows;
  t.cols = cols;
  t.values = values;
  return t;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Tensor::all_finite() const {
  for (double v : *values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace imag
