#include "radar/tape.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "radar/error.hpp"

namespace radar::ad {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(int slot, const Tensor& value) {
  if (auto it = param_nodes_.find(slot); it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{value, {}, {}, true, slot});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(slot, id);
  return Var(this, id);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_[p.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad(Var v) {
  Node& node = nodes_[v.id()];
  if (node.grad.size() == 0 && node.value.size() != 0) {
    node.grad = Tensor::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

const Tensor* Tape::grad_if_any(Var v) const {
  const Node& node = nodes_[v.id()];
  return node.grad.size() == 0 ? nullptr : &node.grad;
}

void Tape::backward(Var out) {
  if (out.rows() != 1 || out.cols() != 1) {
    throw WidthMismatch("backward needs a 1x1 output");
  }
  grad(out)(0, 0) += 1.0;
  for (int i = out.id(); i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(*this, node.value, node.grad);
  }
}

void Tape::accumulate_param_grads(std::span<Tensor> out, double scale) const {
  for (const auto& [slot, id] : param_nodes_) {
    const Node& node = nodes_[id];
    if (node.grad.size() == 0) continue;
    Tensor& target = out[slot];
    if (target.size() == 0) target = Tensor::Zero(node.value.rows(), node.value.cols());
    target += scale * node.grad;
  }
}

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw WidthMismatch(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a) += g.cwiseProduct(t.value(b));
    if (t.requires_grad(b)) t.grad(b) += g.cwiseProduct(t.value(a));
  });
}

Var scale(Var a, double factor) {
  Tape& t = *a.tape();
  return t.record(a.value() * factor, {a},
                  [a, factor](Tape& t, const Tensor& /*y*/, const Tensor& g) { t.grad(a) += factor * g; });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw WidthMismatch("add_row: bias shape");
  Tape& t = *a.tape();
  Tensor out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), {a, row}, [a, row](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(row)) t.grad(row) += g.colwise().sum();
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw WidthMismatch("matmul: inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.requires_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw WidthMismatch("matmul_nt: inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a).noalias() += g * t.value(b);
    if (t.requires_grad(b)) t.grad(b).noalias() += g.transpose() * t.value(a);
  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    t.grad(a).array() += (t.value(a).array() > 0.0).select(g.array(), 0.0);
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().array().tanh().matrix(), {a},
                  [a](Tape& t, const Tensor& y, const Tensor& g) {
                    t.grad(a).array() += g.array() * (1.0 - y.array().square());
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw WidthMismatch("concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) throw WidthMismatch("concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  // record() takes an initializer list; route the dependency through the
  // first requiring parent and handle the rest inside the closure.
  Var anchor = parts.front();
  for (Var p : parts) {
    if (t.requires_grad(p)) {
      anchor = p;
      break;
    }
  }
  return t.record(std::move(out), {anchor}, [saved](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    Eigen::Index at = 0;
    for (Var p : saved) {
      if (t.requires_grad(p)) t.grad(p) += g.middleCols(at, p.cols());
      at += p.cols();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || start + count > a.cols()) throw WidthMismatch("slice_cols: out of range");
  Tape& t = *a.tape();
  return t.record(a.value().middleCols(start, count), {a},
                  [a, start, count](Tape& t, const Tensor& /*y*/, const Tensor& g) {
                    t.grad(a).middleCols(start, count) += g;
                  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  Tape& t = *a.tape();
  Tensor out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = a.value().row(rows[r]);
  std::vector<int> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [a, idx](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t r = 0; r < idx.size(); ++r) ga.row(idx[r]) += g.row(r);
  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const double inv = 1.0 / static_cast<double>(a.rows());
  return t.record(a.value().colwise().sum() * inv, {a}, [a, inv](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    t.grad(a).rowwise() += g.row(0) * inv;
  });
}

Var broadcast_rows(Var row, Eigen::Index rows) {
  if (row.rows() != 1) throw WidthMismatch("broadcast_rows: expects a single row");
  Tape& t = *row.tape();
  return t.record(row.value().replicate(rows, 1), {row}, [row](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    t.grad(row) += g.colwise().sum();
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  return t.record(Tensor::Constant(1, 1, a.value().sum()), {a},
                  [a](Tape& t, const Tensor& /*y*/, const Tensor& g) { t.grad(a).array() += g(0, 0); });
}

Var mean(Var a) {
  Tape& t = *a.tape();
  const double inv = 1.0 / static_cast<double>(a.value().size());
  return t.record(Tensor::Constant(1, 1, a.value().sum() * inv), {a},
                  [a, inv](Tape& t, const Tensor& /*y*/, const Tensor& g) { t.grad(a).array() += g(0, 0) * inv; });
}

Var mean_abs(Var a) {
  Tape& t = *a.tape();
  const double inv = 1.0 / static_cast<double>(a.value().size());
  return t.record(Tensor::Constant(1, 1, a.value().cwiseAbs().sum() * inv), {a},
                  [a, inv](Tape& t, const Tensor& /*y*/, const Tensor& g) {
                    t.grad(a).array() += g(0, 0) * inv * t.value(a).array().sign();
                  });
}

Var dot_const(Var a, const Tensor& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
    throw WidthMismatch("dot_const: shape mismatch");
  }
  Tape& t = *a.tape();
  return t.record(Tensor::Constant(1, 1, a.value().cwiseProduct(weights).sum()), {a},
                  [a, weights](Tape& t, const Tensor& /*y*/, const Tensor& g) { t.grad(a) += g(0, 0) * weights; });
}

Var pick(Var a, std::span<const int> rows, std::span<const int> cols) {
  if (rows.size() != cols.size()) throw WidthMismatch("pick: index lists differ in length");
  Tape& t = *a.tape();
  Tensor out(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t m = 0; m < rows.size(); ++m) out(m, 0) = a.value()(rows[m], cols[m]);
  std::vector<int> r(rows.begin(), rows.end());
  std::vector<int> c(cols.begin(), cols.end());
  return t.record(std::move(out), {a}, [a, r, c](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t m = 0; m < r.size(); ++m) ga(r[m], c[m]) += g(m, 0);
  });
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Row-wise log-sum-exp over allowed entries.
Eigen::VectorXd masked_lse(const Tensor& a, const Mask& allowed) {
  Eigen::VectorXd lse(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double mx = kNegInf;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (allowed(i, j)) mx = std::max(mx, a(i, j));
    }
    if (mx == kNegInf) throw AllMasked("row " + std::to_string(i) + " has no allowed entry");
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (allowed(i, j)) s += std::exp(a(i, j) - mx);
    }
    lse(i) = mx + std::log(s);
  }
  return lse;
}

Tensor masked_probs(const Tensor& a, const Mask& allowed) {
  const Eigen::VectorXd lse = masked_lse(a, allowed);
  Tensor p(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      p(i, j) = allowed(i, j) ? std::exp(a(i, j) - lse(i)) : 0.0;
    }
  }
  return p;
}

}  // namespace

Var masked_softmax_rows(Var a, const Mask& allowed) {
  if (allowed.rows() != a.rows() || allowed.cols() != a.cols()) {
    throw WidthMismatch("masked_softmax_rows: mask shape");
  }
  Tape& t = *a.tape();
  return t.record(masked_probs(a.value(), allowed), {a},
                  [a](Tape& t, const Tensor& y, const Tensor& g) {
                    const Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
                    t.grad(a) += y.cwiseProduct(g.colwise() - inner);
                  });
}

Var softmax_rows(Var a) {
  return masked_softmax_rows(a, Mask::Constant(a.rows(), a.cols(), true));
}

Var masked_log_softmax_rows(Var a, const Mask& allowed) {
  if (allowed.rows() != a.rows() || allowed.cols() != a.cols()) {
    throw WidthMismatch("masked_log_softmax_rows: mask shape");
  }
  Tape& t = *a.tape();
  const Eigen::VectorXd lse = masked_lse(a.value(), allowed);
  Tensor out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out(i, j) = allowed(i, j) ? a.value()(i, j) - lse(i) : kNegInf;
    }
  }
  return t.record(std::move(out), {a}, [a, allowed, lse](Tape& t, const Tensor& /*y*/, const Tensor& g) {
    const Tensor& x = t.value(a);
    Tensor& ga = t.grad(a);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double gsum = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (allowed(i, j)) gsum += g(i, j);
      }
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (allowed(i, j)) ga(i, j) += g(i, j) - std::exp(x(i, j) - lse(i)) * gsum;
      }
    }
  });
}

namespace {

enum class Axis { Columns, Rows };

// Standardize along `axis`: Columns normalizes each column over the rows.
Var standardize(Var x, Var gamma, Var beta, double eps, Axis axis) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
      beta.cols() != x.cols()) {
    throw WidthMismatch("norm: scale/shift must be 1 x cols");
  }
  Tape& t = *x.tape();
  const Tensor& v = x.value();
  Tensor xhat(v.rows(), v.cols());
  Eigen::VectorXd inv_std;
  if (axis == Axis::Columns) {
    const Eigen::RowVectorXd mu = v.colwise().mean();
    const Tensor centered = v.rowwise() - mu;
    inv_std = (centered.array().square().colwise().mean() + eps).rsqrt().matrix().transpose();
    xhat = centered * inv_std.asDiagonal();
  } else {
    const Eigen::VectorXd mu = v.rowwise().mean();
    const Tensor centered = v.colwise() - mu;
    inv_std = (centered.array().square().rowwise().mean() + eps).rsqrt().matrix();
    xhat = inv_std.asDiagonal() * centered;
  }
  Tensor out = (xhat * gamma.value().row(0).asDiagonal()).rowwise() + beta.value().row(0);
  return t.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, xhat, inv_std, axis](Tape& t, const Tensor& /*y*/, const Tensor& g) {
                    if (t.requires_grad(gamma)) {
                      t.grad(gamma) += g.cwiseProduct(xhat).colwise().sum();
                    }
                    if (t.requires_grad(beta)) t.grad(beta) += g.colwise().sum();
                    if (!t.requires_grad(x)) return;
                    const Tensor dxhat = g * t.value(gamma).row(0).asDiagonal();
                    if (axis == Axis::Columns) {
                      const Eigen::RowVectorXd m1 = dxhat.colwise().mean();
                      const Eigen::RowVectorXd m2 = dxhat.cwiseProduct(xhat).colwise().mean();
                      const Tensor inner = (dxhat.rowwise() - m1) - xhat * m2.asDiagonal();
                      t.grad(x) += inner * inv_std.asDiagonal();
                    } else {
                      const Eigen::VectorXd m1 = dxhat.rowwise().mean();
                      const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
                      const Tensor inner = (dxhat.colwise() - m1) - m2.asDiagonal() * xhat;
                      t.grad(x) += inv_std.asDiagonal() * inner;
                    }
                  });
}

}  // namespace

Var instance_norm(Var x, Var gamma, Var beta, double eps) {
  return standardize(x, gamma, beta, eps, Axis::Columns);
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  return standardize(x, gamma, beta, eps, Axis::Rows);
}

}  // namespace radar::ad
