// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over Tensor<Scalar>.
//
// A Tape records every value that depends on a gradient-tracking leaf, in
// creation order. Creation order is a topological order of the graph, so
// backward() is a single reverse sweep over the record. Values that do not
// depend on any leaf are never recorded and are released as soon as the
// last Var referring to them goes away, which keeps inference cheap.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tadvit/tensor.hpp"

namespace tadvit {

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool is_leaf = true;
  Tape<Scalar>* tape = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<Scalar>& grad_buffer() {
    if (grad.empty()) grad = Tensor<Scalar>(value.shape());
    return grad;
  }
};

/// Handle to a value on (or off) a tape. Cheap to copy.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  bool valid() const { return node_ != nullptr; }
  const Tensor<Scalar>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  Tape<Scalar>* tape() const { return node_->tape; }

  /// Accumulated gradient; zeros if nothing has flowed in yet.
  Tensor<Scalar> grad() const {
    return node_->grad.empty() ? Tensor<Scalar>(shape()) : node_->grad;
  }

  const std::shared_ptr<Node<Scalar>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<Scalar>> node_;
};

template <typename Scalar>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Gradient-tracking input.
  Var<Scalar> leaf(Tensor<Scalar> value) {
    auto node = std::make_shared<Node<Scalar>>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->tape = this;
    nodes_.push_back(node);
    return Var<Scalar>(node);
  }

  /// Appends an op result. Used by the primitives in this header.
  Var<Scalar> record(std::shared_ptr<Node<Scalar>> node) {
    node->tape = this;
    node->requires_grad = true;
    node->is_leaf = false;
    nodes_.push_back(node);
    return Var<Scalar>(std::move(node));
  }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the record in reverse. Leaf
  /// gradients accumulate across calls; zero_grad() resets them.
  void backward(const Var<Scalar>& loss) {
    if (!loss.valid() || loss.value().size() != 1) {
      throw ShapeError("backward needs a scalar loss, got " +
                       (loss.valid() ? to_string(loss.shape()) : std::string("<null>")));
    }
    if (loss.tape() != this) throw Error("backward: loss was not produced on this tape");
    for (auto& node : nodes_) {
      if (!node->is_leaf) node->grad = Tensor<Scalar>();
    }
    loss.node()->grad_buffer()[0] += Scalar(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Scalar>& node = **it;
      if (node.is_leaf || node.grad.empty() || !node.backward) continue;
      node.backward(node);
      ++visits_;
    }
  }

  void zero_grad() {
    for (auto& node : nodes_) {
      if (node->is_leaf && !node->grad.empty()) node->grad.set_zero();
    }
  }

  std::size_t size() const { return nodes_.size(); }
  /// Total op nodes whose backward rule has run, across all backward() calls.
  std::size_t backward_visits() const { return visits_; }

 private:
  std::vector<std::shared_ptr<Node<Scalar>>> nodes_;
  std::size_t visits_ = 0;
};

/// Value without gradient tracking.
template <typename Scalar>
Var<Scalar> constant(Tensor<Scalar> value) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  return Var<Scalar>(std::move(node));
}

// Primitives. Every op validates shapes and throws ShapeError with the
// offending shapes; no implicit broadcasting beyond what is documented.

/// [m x k] * [k x n] -> [m x n]
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b);
/// [m x k] * [n x k]^T -> [m x n]
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b);
/// Elementwise sum of equal shapes.
template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);
/// Adds bias [d] (or [1 x d]) to every row of x[... x d].
template <typename Scalar>
Var<Scalar> add_bias(const Var<Scalar>& x, const Var<Scalar>& bias);
/// Elementwise product of equal shapes.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor);
/// tanh-approximated GELU.
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& x);
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias,
                       Scalar eps);
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& x);

/// Multi-head scaled dot-product self-attention on packed [N x 3d] q|k|v
/// projections; returns the concatenated per-head outputs [N x d]. Head h
/// reads columns [h*d/heads, (h+1)*d/heads) of each of q, k and v.
template <typename Scalar>
Var<Scalar> attention(const Var<Scalar>& qkv, int heads);
/// Columns [start, start + count) of x viewed as rows x cols.
template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index start, Index count);
template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts);
/// Rows x[indices[i]] in the given order.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& x, std::span<const Index> indices);
/// [total x d] output with rows[i] at row indices[i]; every other row is fill[d].
template <typename Scalar>
Var<Scalar> scatter_rows(const Var<Scalar>& rows, std::span<const Index> indices,
                         const Var<Scalar>& fill, Index total);
/// Column means -> [1 x d]; bitwise independent of the row order.
template <typename Scalar>
Var<Scalar> mean_rows(const Var<Scalar>& x);
/// Sum of all elements -> [1].
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x);
/// Mean squared error over the rows flagged in row_mask -> [1]. Zero when no
/// row is flagged. Rows that are not flagged receive exactly zero gradient.
template <typename Scalar>
Var<Scalar> masked_mse(const Var<Scalar>& prediction, const Var<Scalar>& target,
                       std::span<const std::uint8_t> row_mask);
/// -log softmax(logits)[label] for a single logit row -> [1].
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(const Var<Scalar>& logits, Index label);

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) {
  return mul(a, b);
}

/// x * w + b with w [in x out], b [out].
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b) {
  return add_bias(matmul(x, w), b);
}

}  // namespace tadvit
