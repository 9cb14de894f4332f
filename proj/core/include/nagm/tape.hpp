#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nagm/tensor.hpp"

namespace nagm {

/// Handle into a Tape node.
struct Var {
  std::size_t idx = static_cast<std::size_t>(-1);
  bool valid() const { return idx != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape. Records every primitive as it executes; backward()
/// replays adjoints in reverse order. One tape per forward pass.
class Tape {
 public:
  Var leaf(Tensor value);

  // Elementwise / shape ops.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var scale_by(Var a, Var scalar);  // elementwise a * s, s a 1-element var
  Var add_const(Var a, double k);
  Var concat(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  // Linear algebra. W is (m x n), x is n.
  Var matvec(Var w, Var x);
  Var matvec_t(Var w, Var x);  // W^T x, W is (m x n), x is m
  Var affine(Var x, Var w, Var b);
  Var column(Var w, std::size_t j);
  Var dot(Var a, Var b);

  Var softmax(Var a);
  /// log softmax(logits)[idx]; stable, adjoint is onehot - probs.
  Var log_softmax_pick(Var logits, std::size_t idx);
  /// Binary cross-entropy from a pre-sigmoid scalar logit:
  /// softplus(logit) - label * logit. Adjoint is sigmoid(logit) - label.
  Var bce_with_logit(Var logit, double label);
  /// Per-coordinate max over vars; gradient routed to the earliest argmax.
  Var max_pool(const std::vector<Var>& states);
  /// max_pool restricted to positions with mask true.
  Var max_pool_time(const std::vector<Var>& states,
                    const std::vector<bool>& mask);
  /// u.v / (|u||v|), guarded against degenerate inputs.
  Var cosine(Var u, Var v);

  const Tensor& value(Var v) const { return values_[v.idx]; }
  double scalar(Var v) const { return values_[v.idx].data.at(0); }

  /// Seeds d(out)/d(out)=1 and accumulates adjoints for every node.
  void backward(Var out);
  /// Valid after backward(); zero tensor for nodes off the path.
  const Tensor& grad(Var v) const { return grads_[v.idx]; }

  std::size_t size() const { return values_.size(); }

 private:
  Var push(Tensor value, std::function<void()> back = nullptr);
  Tensor& grad_ref(std::size_t idx) { return grads_[idx]; }

  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<std::function<void()>> backs_;
};

}  // namespace nagm
