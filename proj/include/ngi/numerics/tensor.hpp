// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ngi {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct TensorNode;

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

/// Backward closure of a recorded op. Receives the op's own node, whose
/// `grad` holds dLoss/dOutput, and accumulates into its parents.
template <typename T>
using BackwardFn = std::function<void(const TensorNode<T>&)>;

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty when absent
  bool requires_grad = false;
  std::vector<NodePtr<T>> parents;
  BackwardFn<T> backward;
  const char* op = "leaf";

  bool is_leaf() const { return !backward; }
  /// Allocates a zeroed gradient buffer on first use.
  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

/// Dense row-major N-d array with optional reverse-mode graph linkage.
///
/// A Tensor is a shared handle: copies alias the same node. Values produced by
/// ops are never written after creation; only leaves (parameters) are updated
/// in place by the optimizer, and only gradient buffers accumulate.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(NodePtr<T> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape) { return full(std::move(shape), T(0)); }
  static Tensor ones(Shape shape) { return full(std::move(shape), T(1)); }
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> data);
  static Tensor scalar(T value) { return from({}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  /// Extent of axis `axis`; negative values count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }

  std::span<const T> data() const { return node_->data; }
  /// In-place access for leaves (parameters, inputs under finite differences).
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T operator[](std::int64_t i) const { return node_->data[static_cast<std::size_t>(i)]; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool value = true) {
    node_->requires_grad = value;
    return *this;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  /// Copy of the values with no graph history.
  Tensor detach() const { return from(node_->shape, node_->data); }
  const char* op() const { return node_->op; }

  const NodePtr<T>& node() const { return node_; }

 private:
  NodePtr<T> node_;
};

/// Disables graph recording for its lifetime (inference, finite differences).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op result. When recording is enabled and any input requires a
/// gradient, the result is linked to `inputs` and carries `backward`.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::initializer_list<Tensor<T>> inputs,
                      const char* op, BackwardFn<T> backward);
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& inputs,
                      const char* op, BackwardFn<T> backward);

/// Reverse-mode pass from a scalar loss. Leaf gradients accumulate across
/// calls; callers zero them explicitly between optimization steps.
template <typename T>
void backward(const Tensor<T>& loss);

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> out(x.data().begin(), x.data().end());
  return Tensor<To>::from(x.shape(), std::move(out));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ngi
