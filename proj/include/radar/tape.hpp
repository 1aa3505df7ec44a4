#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace radar::ad {

using Tensor = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;  // true = allowed

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode recording of a computation over dense matrices. Each recorded
// node owns its value; backward closures read parent values through the tape
// and accumulate into parent gradients.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& value, const Tensor& grad)>;

  Var constant(Tensor value);
  Var leaf(Tensor value);

  /// Leaf bound to parameter `slot`; repeated calls return the same node.
  Var param(int slot, const Tensor& value);

  /// Records an op result. `backward` is only kept when some parent needs a
  /// gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);

  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }

  /// Gradient buffer of v, zero-initialized on first access.
  Tensor& grad(Var v);
  const Tensor* grad_if_any(Var v) const;

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and runs the closures in reverse.
  void backward(Var out);

  /// out[slot] += scale * dL/d(param slot) for every parameter used here.
  void accumulate_param_grads(std::span<Tensor> out, double scale = 1.0) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
    int param_slot = -1;
  };

  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;
};

// ---- generic ops -----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                  // elementwise
Var scale(Var a, double factor);
Var add_row(Var a, Var row);            // a + broadcast of a 1 x cols row
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);            // a * b^T
Var relu(Var a);
Var tanh(Var a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> rows);
Var mean_rows(Var a);                   // 1 x cols column means
Var broadcast_rows(Var row, Eigen::Index rows);
Var sum(Var a);                         // 1 x 1
Var mean(Var a);                        // 1 x 1
Var mean_abs(Var a);                    // 1 x 1, mean |a_ij|
Var dot_const(Var a, const Tensor& weights);  // 1 x 1, sum a_ij * w_ij
Var pick(Var a, std::span<const int> rows, std::span<const int> cols);  // m x 1

/// Row-wise softmax restricted to allowed entries; disallowed outputs are 0.
Var masked_softmax_rows(Var a, const Mask& allowed);
/// Row-wise log-softmax restricted to allowed entries; disallowed are -inf.
Var masked_log_softmax_rows(Var a, const Mask& allowed);
/// Plain row-wise softmax.
Var softmax_rows(Var a);

/// Per-column standardization across rows with learned scale and shift
/// (both 1 x cols): (x - mean) / sqrt(var + eps) * gamma + beta.
Var instance_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Per-row standardization across columns, same parameterization.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

}  // namespace radar::ad
