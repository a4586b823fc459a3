#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "egcm/rng.hpp"
#include "egcm/tensor.hpp"

namespace egcm::ad {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

class Tape;

// Propagates the gradient of a recorded node back into its inputs.
using Backprop = std::function<void(Tape&, const Tensor2& out_grad)>;

/// Reverse-mode gradient tape.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and backward() is a single reverse sweep. Only nodes
/// that depend on a parameter carry a backprop closure; constants are free.
class Tape {
 public:
  Var constant(Tensor2 value);
  Var parameter(Tensor2 value);

  // Appends an op result. `backprop` is dropped when no input needs a gradient.
  Var record(Tensor2 value, std::span<const Var> inputs, Backprop backprop);

  const Tensor2& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient of the last backward() loss; zeros for nodes it never reached.
  Tensor2 grad(Var v) const;

  // Adds `g` into the gradient buffer of `v` (no-op for constants).
  void accumulate(Var v, const Tensor2& g);
  // Direct access to the gradient buffer, allocated on first use.
  Tensor2& grad_buffer(Var v);

  // Gradients of a 1x1 `loss` w.r.t. every node. Throws ShapeError otherwise.
  void backward(Var loss);

  // Parameters in registration order.
  const std::vector<Var>& parameters() const noexcept { return params_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Backprop backprop;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<Var> params_;
};

// Differentiable primitives.

Var matmul(Tape& t, Var a, Var b);
// x + bias broadcast over rows; bias is 1 x cols.
Var add_row_bias(Tape& t, Var x, Var bias);
Var relu(Tape& t, Var x);
// Elementwise product with a constant mask.
Var mul_mask(Tape& t, Var x, Tensor2 mask);
Var dropout(Tape& t, Var x, double p, bool training, Rng& rng);
Var hconcat(Tape& t, Var a, Var b);
Var softmax_rows(Tape& t, Var x);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);
// Sum of all entries, as a 1x1 tensor.
Var sum(Tape& t, Var x);
// out[r] = concat(x[left[r]], x[right[r]]).
Var gather_concat_rows(Tape& t, Var x, std::span<const std::size_t> left,
                       std::span<const std::size_t> right);

/// Mean binary cross-entropy over the rows listed in `rows`.
///
/// `probs` is an n x 2 softmax output: column 1 is the attack probability p,
/// column 0 is 1 - p. Both are clamped to [clamp, 1 - clamp] before the log.
Var binary_cross_entropy(Tape& t, Var probs, std::span<const int> labels,
                         std::span<const std::size_t> rows, double clamp = 1e-12);

}  // namespace egcm::ad
