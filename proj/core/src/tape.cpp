#include "imag/tape.hpp"

#include <algorithm>
#include <cmath>

#include "imag/error.hpp"

namespace imag {

namespace {
// Floor for probabilities fed to log so a hard zero stays finite.
constexpr double kProbFloor = 1e-300;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}
}  // namespace

// Callers must ensure_grad() on `out` before building `bw`: the closure
// captures its own Tensor copy, and a grad buffer allocated after the capture
// would not be shared with it.
Tensor& Tape::record(Tensor out, std::function<void()> bw) {
  out.ensure_grad();
  out.node = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{out, std::move(bw)});
  return nodes_.back().out;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " vs " + b.shape_str());
  Tensor out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      const double av = a.at(i, k);
      if (av == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += av * b.at(k, j);
    }
  out.ensure_grad();
  return record(out, [a, b, out] {
    if (a.grad) {
      // dL/da = g * b^T
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
          const double g = out.gat(i, j);
          if (g == 0.0) continue;
          for (int k = 0; k < a.cols; ++k) a.gat(i, k) += g * b.at(k, j);
        }
    }
    if (b.grad) {
      // dL/db = a^T * g
      for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
          const double av = a.at(i, k);
          if (av == 0.0) continue;
          for (int j = 0; j < b.cols; ++j) b.gat(k, j) += av * out.gat(i, j);
        }
    }
  });
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.rows, a.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] + (*b.values)[i];
  out.ensure_grad();
  return record(out, [a, b, out] {
    const int n2 = out.size();
    if (a.grad)
      for (int i = 0; i < n2; ++i) (*a.grad)[i] += (*out.grad)[i];
    if (b.grad)
      for (int i = 0; i < n2; ++i) (*b.grad)[i] += (*out.grad)[i];
  });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.rows, a.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) (*out.values)[i] = (*a.values)[i] * (*b.values)[i];
  out.ensure_grad();
  return record(out, [a, b, out] {
    const int n2 = out.size();
    if (a.grad)
      for (int i = 0; i < n2; ++i) (*a.grad)[i] += (*out.grad)[i] * (*b.values)[i];
    if (b.grad)
      for (int i = 0; i < n2; ++i) (*b.grad)[i] += (*out.grad)[i] * (*a.values)[i];
  });
}

Tensor Tape::scale_shift(const Tensor& x, double scale, double shift) {
  Tensor out(x.rows, x.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) (*out.values)[i] = scale * (*x.values)[i] + shift;
  out.ensure_grad();
  return record(out, [x, out, scale] {
    if (!x.grad) return;
    const int n2 = out.size();
    for (int i = 0; i < n2; ++i) (*x.grad)[i] += scale * (*out.grad)[i];
  });
}

Tensor Tape::add_col_vec(const Tensor& m, const Tensor& v) {
  if (v.cols != 1 || v.rows != m.rows)
    throw ShapeError("add_col_vec: need " + std::to_string(m.rows) + "x1 vector, got " +
                     v.shape_str() + " against " + m.shape_str());
  Tensor out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j) + v.at(i, 0);
  out.ensure_grad();
  return record(out, [m, v, out] {
    if (m.grad) {
      const int n2 = out.size();
      for (int i = 0; i < n2; ++i) (*m.grad)[i] += (*out.grad)[i];
    }
    if (v.grad)
      for (int i = 0; i < out.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < out.cols; ++j) s += out.gat(i, j);
        v.gat(i, 0) += s;
      }
  });
}

Tensor Tape::sigmoid(const Tensor& x) {
  Tensor out(x.rows, x.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) {
    const double v = (*x.values)[i];
    (*out.values)[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                : std::exp(v) / (1.0 + std::exp(v));
  }
  out.ensure_grad();
  return record(out, [x, out] {
    if (!x.grad) return;
    const int n2 = out.size();
    for (int i = 0; i < n2; ++i) {
      const double y = (*out.values)[i];
      (*x.grad)[i] += (*out.grad)[i] * y * (1.0 - y);
    }
  });
}

Tensor Tape::tanh(const Tensor& x) {
  Tensor out(x.rows, x.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) (*out.values)[i] = std::tanh((*x.values)[i]);
  out.ensure_grad();
  return record(out, [x, out] {
    if (!x.grad) return;
    const int n2 = out.size();
    for (int i = 0; i < n2; ++i) {
      const double y = (*out.values)[i];
      (*x.grad)[i] += (*out.grad)[i] * (1.0 - y * y);
    }
  });
}

Tensor Tape::softmax_columns(const Tensor& m) {
  Tensor out(m.rows, m.cols);
  for (int j = 0; j < m.cols; ++j) {
    double mx = m.at(0, j);
    for (int i = 1; i < m.rows; ++i) mx = std::max(mx, m.at(i, j));
    double z = 0.0;
    for (int i = 0; i < m.rows; ++i) {
      const double e = std::exp(m.at(i, j) - mx);
      out.at(i, j) = e;
      z += e;
    }
    for (int i = 0; i < m.rows; ++i) out.at(i, j) /= z;
  }
  out.ensure_grad();
  return record(out, [m, out] {
    if (!m.grad) return;
    for (int j = 0; j < out.cols; ++j) {
      double dot = 0.0;
      for (int i = 0; i < out.rows; ++i) dot += out.gat(i, j) * out.at(i, j);
      for (int i = 0; i < out.rows; ++i)
        m.gat(i, j) += out.at(i, j) * (out.gat(i, j) - dot);
    }
  });
}

Tensor Tape::conv1d_windows(const Tensor& e_mat, const Tensor& kernel, const Tensor& bias, int k) {
  const int e = e_mat.rows;
  const int n = e_mat.cols;
  if (k < 1) throw ConfigError("conv1d_windows: window length must be >= 1");
  if (n < k)
    throw ShapeError("conv1d_windows: input too short, " + std::to_string(n) +
                     " columns for window length " + std::to_string(k));
  if (kernel.rows != e || kernel.cols != e * k)
    throw ShapeError("conv1d_windows: kernel must be " + std::to_string(e) + "x" +
                     std::to_string(e * k) + ", got " + kernel.shape_str());
  if (bias.rows != e || bias.cols != 1)
    throw ShapeError("conv1d_windows: bias must be " + std::to_string(e) + "x1, got " +
                     bias.shape_str());
  const int width = n - k + 1;
  Tensor out(e, width);
  // Window j flattens columns j..j+k-1, column by column: flat[c*e + r].
  for (int j = 0; j < width; ++j)
    for (int r = 0; r < e; ++r) {
      double acc = bias.at(r, 0);
      for (int c = 0; c < k; ++c)
        for (int rr = 0; rr < e; ++rr) acc += kernel.at(r, c * e + rr) * e_mat.at(rr, j + c);
      out.at(r, j) = acc;
    }
  out.ensure_grad();
  return record(out, [e_mat, kernel, bias, out, e, k] {
    const int width2 = out.cols;
    for (int j = 0; j < width2; ++j)
      for (int r = 0; r < e; ++r) {
        const double g = out.gat(r, j);
        if (g == 0.0) continue;
        if (bias.grad) bias.gat(r, 0) += g;
        for (int c = 0; c < k; ++c)
          for (int rr = 0; rr < e; ++rr) {
            if (kernel.grad) kernel.gat(r, c * e + rr) += g * e_mat.at(rr, j + c);
            if (e_mat.grad) e_mat.gat(rr, j + c) += g * kernel.at(r, c * e + rr);
          }
      }
  });
}

Tensor Tape::embed(const Tensor& table, std::span<const int> ids) {
  if (ids.empty()) throw ConfigError("embed: empty id sequence");
  for (int id : ids)
    if (id < 0 || id >= table.rows)
      throw VocabError("embed: token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(table.rows));
  const int e = table.cols;
  Tensor out(e, static_cast<int>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int r = 0; r < e; ++r) out.at(r, static_cast<int>(i)) = table.at(ids[i], r);
  std::vector<int> ids_copy(ids.begin(), ids.end());
  out.ensure_grad();
  return record(out, [table, out, ids_copy] {
    if (!table.grad) return;
    for (std::size_t i = 0; i < ids_copy.size(); ++i)
      for (int r = 0; r < out.rows; ++r)
        table.gat(ids_copy[i], r) += out.gat(r, static_cast<int>(i));
  });
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows)
    throw ShapeError("concat_cols: row mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor out(a.rows, a.cols + b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) out.at(i, j) = a.at(i, j);
    for (int j = 0; j < b.cols; ++j) out.at(i, a.cols + j) = b.at(i, j);
  }
  out.ensure_grad();
  return record(out, [a, b, out] {
    for (int i = 0; i < out.rows; ++i) {
      if (a.grad)
        for (int j = 0; j < a.cols; ++j) a.gat(i, j) += out.gat(i, j);
      if (b.grad)
        for (int j = 0; j < b.cols; ++j) b.gat(i, j) += out.gat(i, a.cols + j);
    }
  });
}

Tensor Tape::concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols)
    throw ShapeError("concat_rows: column mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor out(a.rows + b.rows, a.cols);
  for (int j = 0; j < a.cols; ++j) {
    for (int i = 0; i < a.rows; ++i) out.at(i, j) = a.at(i, j);
    for (int i = 0; i < b.rows; ++i) out.at(a.rows + i, j) = b.at(i, j);
  }
  out.ensure_grad();
  return record(out, [a, b, out] {
    for (int j = 0; j < out.cols; ++j) {
      if (a.grad)
        for (int i = 0; i < a.rows; ++i) a.gat(i, j) += out.gat(i, j);
      if (b.grad)
        for (int i = 0; i < b.rows; ++i) b.gat(i, j) += out.gat(a.rows + i, j);
    }
  });
}

Tensor Tape::hstack(std::span<const Tensor> columns) {
  if (columns.empty()) throw ConfigError("hstack: empty column list");
  const int r = columns.front().rows;
  for (const Tensor& c : columns)
    if (c.cols != 1 || c.rows != r)
      throw ShapeError("hstack: need " + std::to_string(r) + "x1 columns, got " + c.shape_str());
  Tensor out(r, static_cast<int>(columns.size()));
  for (int j = 0; j < out.cols; ++j)
    for (int i = 0; i < r; ++i) out.at(i, j) = columns[j].at(i, 0);
  std::vector<Tensor> inputs(columns.begin(), columns.end());
  out.ensure_grad();
  return record(out, [inputs, out] {
    for (int j = 0; j < out.cols; ++j) {
      if (!inputs[j].grad) continue;
      for (int i = 0; i < out.rows; ++i) inputs[j].gat(i, 0) += out.gat(i, j);
    }
  });
}

Tensor Tape::slice_rows(const Tensor& x, int row0, int nrows) {
  if (row0 < 0 || nrows <= 0 || row0 + nrows > x.rows)
    throw ShapeError("slice_rows: rows [" + std::to_string(row0) + ", " +
                     std::to_string(row0 + nrows) + ") outside " + x.shape_str());
  Tensor out(nrows, x.cols);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(row0 + i, j);
  out.ensure_grad();
  return record(out, [x, out, row0] {
    if (!x.grad) return;
    for (int i = 0; i < out.rows; ++i)
      for (int j = 0; j < out.cols; ++j) x.gat(row0 + i, j) += out.gat(i, j);
  });
}

Tensor Tape::col(const Tensor& x, int j) {
  if (j < 0 || j >= x.cols)
    throw ShapeError("col: column " + std::to_string(j) + " outside " + x.shape_str());
  Tensor out(x.rows, 1);
  for (int i = 0; i < x.rows; ++i) out.at(i, 0) = x.at(i, j);
  out.ensure_grad();
  return record(out, [x, out, j] {
    if (!x.grad) return;
    for (int i = 0; i < out.rows; ++i) x.gat(i, j) += out.gat(i, 0);
  });
}

Tensor Tape::transpose(const Tensor& x) {
  Tensor out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(j, i) = x.at(i, j);
  out.ensure_grad();
  return record(out, [x, out] {
    if (!x.grad) return;
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j) x.gat(i, j) += out.gat(j, i);
  });
}

Tensor Tape::add_n(std::span<const Tensor> xs) {
  if (xs.empty()) throw ConfigError("add_n: empty operand list");
  for (const Tensor& t : xs) check_same_shape(xs.front(), t, "add_n");
  Tensor out(xs.front().rows, xs.front().cols);
  const int n = out.size();
  for (const Tensor& t : xs)
    for (int i = 0; i < n; ++i) (*out.values)[i] += (*t.values)[i];
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  out.ensure_grad();
  return record(out, [inputs, out] {
    const int n2 = out.size();
    for (const Tensor& t : inputs) {
      if (!t.grad) continue;
      for (int i = 0; i < n2; ++i) (*t.grad)[i] += (*out.grad)[i];
    }
  });
}

Tensor Tape::pick(const Tensor& v, int index) {
  if (v.cols != 1) throw ShapeError("pick: need a column vector, got " + v.shape_str());
  if (index < 0 || index >= v.rows)
    throw ShapeError("pick: index " + std::to_string(index) + " outside " + v.shape_str());
  Tensor out = Tensor::scalar(v.at(index, 0));
  out.ensure_grad();
  return record(out, [v, out, index] {
    if (v.grad) v.gat(index, 0) += (*out.grad)[0];
  });
}

Tensor Tape::neg_log_pick(const Tensor& v, int index) {
  if (v.cols != 1) throw ShapeError("neg_log_pick: need a column vector, got " + v.shape_str());
  if (index < 0 || index >= v.rows)
    throw ShapeError("neg_log_pick: index " + std::to_string(index) + " outside " + v.shape_str());
  const double p = std::max(v.at(index, 0), kProbFloor);
  Tensor out = Tensor::scalar(-std::log(p));
  out.ensure_grad();
  return record(out, [v, out, index, p] {
    if (v.grad) v.gat(index, 0) += (*out.grad)[0] * (-1.0 / p);
  });
}

Tensor Tape::mul_by_scalar(const Tensor& x, const Tensor& s) {
  if (s.rows != 1 || s.cols != 1)
    throw ShapeError("mul_by_scalar: scale must be 1x1, got " + s.shape_str());
  const double sv = (*s.values)[0];
  Tensor out(x.rows, x.cols);
  const int n = out.size();
  for (int i = 0; i < n; ++i) (*out.values)[i] = (*x.values)[i] * sv;
  out.ensure_grad();
  return record(out, [x, s, out, sv] {
    const int n2 = out.size();
    if (x.grad)
      for (int i = 0; i < n2; ++i) (*x.grad)[i] += (*out.grad)[i] * sv;
    if (s.grad) {
      double acc = 0.0;
      for (int i = 0; i < n2; ++i) acc += (*out.grad)[i] * (*x.values)[i];
      (*s.grad)[0] += acc;
    }
  });
}

Tensor Tape::sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : *x.values) acc += v;
  Tensor out = Tensor::scalar(acc);
  out.ensure_grad();
  return record(out, [x, out] {
    if (!x.grad) return;
    const double g = (*out.grad)[0];
    for (double& gv : *x.grad) gv += g;
  });
}

Tensor Tape::hinge_sum(const Tensor& v, double threshold) {
  if (v.cols != 1) throw ShapeError("hinge_sum: need a column vector, got " + v.shape_str());
  double acc = 0.0;
  for (int i = 0; i < v.rows; ++i) acc += std::max(0.0, v.at(i, 0) - threshold);
  Tensor out = Tensor::scalar(acc);
  out.ensure_grad();
  return record(out, [v, out, threshold] {
    if (!v.grad) return;
    const double g = (*out.grad)[0];
    for (int i = 0; i < v.rows; ++i)
      if (v.at(i, 0) > threshold) v.gat(i, 0) += g;
  });
}

Tensor Tape::scatter_sum(const Tensor& weights, std::span<const int> ids, int out_dim) {
  if (weights.cols != 1)
    throw ShapeError("scatter_sum: need a column vector, got " + weights.shape_str());
  if (static_cast<int>(ids.size()) > weights.rows)
    throw ShapeError("scatter_sum: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(weights.rows) + " weights");
  for (int id : ids)
    if (id < 0 || id >= out_dim)
      throw VocabError("scatter_sum: id " + std::to_string(id) + " outside output size " +
                       std::to_string(out_dim));
  Tensor out(out_dim, 1);
  for (std::size_t i = 0; i < ids.size(); ++i) out.at(ids[i], 0) += weights.at(static_cast<int>(i), 0);
  std::vector<int> ids_copy(ids.begin(), ids.end());
  out.ensure_grad();
  return record(out, [weights, out, ids_copy] {
    if (!weights.grad) return;
    for (std::size_t i = 0; i < ids_copy.size(); ++i)
      weights.gat(static_cast<int>(i), 0) += out.gat(ids_copy[i], 0);
  });
}

Tensor Tape::coverage_penalty(std::span<const Tensor> attention) {
  if (attention.empty()) throw ConfigError("coverage_penalty: empty attention history");
  const int w = attention.front().rows;
  for (const Tensor& a : attention) {
    if (a.cols != 1 || a.rows != w)
      throw ShapeError("coverage_penalty: inconsistent attention shape " + a.shape_str());
  }
  const int steps = static_cast<int>(attention.size());
  std::vector<double> cov(static_cast<std::size_t>(w), 0.0);
  // picked_a[t*w+i] records whether min() chose the attention branch.
  std::vector<char> picked_a(static_cast<std::size_t>(steps) * w, 0);
  double total = 0.0;
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < w; ++i) {
      const double a = attention[t].at(i, 0);
      if (a < cov[i]) {
        total += a;
        picked_a[static_cast<std::size_t>(t) * w + i] = 1;
      } else {
        total += cov[i];
      }
      cov[i] += a;
    }
  }
  Tensor out = Tensor::scalar(total);
  std::vector<Tensor> inputs(attention.begin(), attention.end());
  out.ensure_grad();
  return record(out, [inputs, out, picked_a, w] {
    const double g = (*out.grad)[0];
    const int steps2 = static_cast<int>(inputs.size());
    // A coverage pick at step t' sends gradient to every earlier attention
    // vector; walk backwards keeping a per-position count of such picks.
    std::vector<double> later_cov_picks(static_cast<std::size_t>(w), 0.0);
    for (int t = steps2 - 1; t >= 0; --t) {
      for (int i = 0; i < w; ++i) {
        const bool a_branch = picked_a[static_cast<std::size_t>(t) * w + i] != 0;
        if (inputs[t].grad)
          inputs[t].gat(i, 0) += g * ((a_branch ? 1.0 : 0.0) + later_cov_picks[i]);
        if (!a_branch) later_cov_picks[i] += 1.0;
      }
    }
  });
}

void Tape::backward(const Tensor& loss) {
  if (loss.rows != 1 || loss.cols != 1)
    throw ConfigError("backward: loss must be scalar, got " + loss.shape_str());
  if (loss.node < 0 || loss.node >= static_cast<int>(nodes_.size()) ||
      nodes_[loss.node].out.values != loss.values)
    throw ConfigError("backward: loss was not produced on this tape");
  (*nodes_[loss.node].out.grad)[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

void Tape::reset_grads() {
  for (Node& n : nodes_) n.out.zero_grad();
}

LstmState lstm_step(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& p) {
  const int h = prev.h.rows;
  if (p.w_ih.rows != 4 * h || p.w_hh.rows != 4 * h || p.w_hh.cols != h || p.b.rows != 4 * h)
    throw ShapeError("lstm_step: parameter shapes inconsistent with hidden size " +
                     std::to_string(h));
  if (p.w_ih.cols != x.rows)
    throw ShapeError("lstm_step: input dim " + x.shape_str() + " vs weights " + p.w_ih.shape_str());
  Tensor pre = tape.add(tape.add(tape.matmul(p.w_ih, x), tape.matmul(p.w_hh, prev.h)), p.b);
  Tensor gate_i = tape.sigmoid(tape.slice_rows(pre, 0, h));
  Tensor gate_f = tape.sigmoid(tape.slice_rows(pre, h, h));
  Tensor cand = tape.tanh(tape.slice_rows(pre, 2 * h, h));
  Tensor gate_o = tape.sigmoid(tape.slice_rows(pre, 3 * h, h));
  Tensor c = tape.add(tape.mul(gate_f, prev.c), tape.mul(gate_i, cand));
  Tensor hs = tape.mul(gate_o, tape.tanh(c));
  return LstmState{hs, c};
}

}  // namespace imag
