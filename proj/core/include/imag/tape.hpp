#pragma once

#include <functional>
#include <span>
#include <vector>

#include "imag/tensor.hpp"

namespace imag {

/// Reverse-mode tape. Operations record themselves in topological order
/// (inputs of a node are always created before it); backward replays the
/// recorded rules once each, in reverse. One tape per training step, never
/// shared across threads.
class Tape {
 public:
  /// Standard matrix product a[pxq] * b[qxr].
  Tensor matmul(const Tensor& a, const Tensor& b);
  /// Elementwise sum of two same-shape tensors.
  Tensor add(const Tensor& a, const Tensor& b);
  /// Elementwise product of two same-shape tensors.
  Tensor mul(const Tensor& a, const Tensor& b);
  /// Elementwise affine map scale*x + shift with constant coefficients.
  Tensor scale_shift(const Tensor& x, double scale, double shift);
  /// Adds column vector v[px1] to every column of m[pxq].
  Tensor add_col_vec(const Tensor& m, const Tensor& v);
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  /// Softmax over each column independently, with per-column max
  /// subtraction; every output column sums to 1.
  Tensor softmax_columns(const Tensor& m);
  /// Single linear map slid over width-k windows of e_mat[exn]:
  /// column j of the output is kernel * vec(e_mat[:, j..j+k)) + bias, where
  /// vec stacks the window column by column. Output width is n-k+1.
  Tensor conv1d_windows(const Tensor& e_mat, const Tensor& kernel, const Tensor& bias, int k);
  /// Gathers rows of table[|V|xe] by token id into columns of an e x n matrix.
  Tensor embed(const Tensor& table, std::span<const int> ids);
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  /// Column vectors side by side as one matrix, in a single node.
  Tensor hstack(std::span<const Tensor> columns);
  Tensor slice_rows(const Tensor& x, int row0, int nrows);
  /// Column j of x as a column vector.
  Tensor col(const Tensor& x, int j);
  Tensor transpose(const Tensor& x);
  /// Sum of any number of same-shape tensors as a single node.
  Tensor add_n(std::span<const Tensor> xs);
  /// v[index] as a scalar, gradient flows into that element only.
  Tensor pick(const Tensor& v, int index);
  /// -log(v[index]), floored at a tiny positive constant so a zero
  /// probability yields a large finite loss instead of NaN/Inf.
  Tensor neg_log_pick(const Tensor& v, int index);
  /// x scaled by a 1x1 tensor; gradient flows into both factors.
  Tensor mul_by_scalar(const Tensor& x, const Tensor& s);
  Tensor sum_all(const Tensor& x);
  /// sum_i max(0, v_i - threshold) over a column vector.
  Tensor hinge_sum(const Tensor& v, double threshold);
  /// out[ids[i]] += weights[i] for i < ids.size(); trailing weight positions
  /// (beyond the id list) contribute nothing. Output is out_dim x 1.
  Tensor scatter_sum(const Tensor& weights, std::span<const int> ids, int out_dim);
  /// sum_t sum_i min(a_t[i], cov_t[i]) with cov_t the running sum of earlier
  /// attention vectors; a single fused node over the whole history.
  Tensor coverage_penalty(std::span<const Tensor> attention);

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor
  /// reachable from loss that carries a grad buffer. Accumulating: callers
  /// zero grads between passes.
  void backward(const Tensor& loss);

  /// Zeros the grad buffers of every tensor this tape produced.
  void reset_grads();

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor out;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;

  Tensor& record(Tensor out, std::function<void()> bw);
};

/// LSTM cell parameters; gate layout along rows is [input; forget;
/// candidate; output], each block of the hidden size.
struct LstmParams {
  Tensor w_ih;  // 4h x input_dim
  Tensor w_hh;  // 4h x h
  Tensor b;     // 4h x 1
};

struct LstmState {
  Tensor h;  // h x 1
  Tensor c;  // h x 1
};

/// One LSTM step: sigmoid input/forget/output gates, tanh candidate.
/// Built from tape primitives, so gradients need no dedicated rule.
LstmState lstm_step(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& p);

}  // namespace imag
