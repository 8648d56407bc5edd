// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/numerics/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace ngi {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + to_string(shape));
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  auto node = std::make_shared<TensorNode<T>>();
  node->data.assign(static_cast<std::size_t>(ngi::numel(shape)), value);
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data) {
  if (ngi::numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("shape " + to_string(shape) + " does not hold " +
                     std::to_string(data.size()) + " elements");
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return Tensor(std::move(node));
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  }
  return node_->data[0];
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& inputs,
                      const char* op, BackwardFn<T> backward) {
  Tensor<T> out = Tensor<T>::from(std::move(shape), std::move(data));
  auto& node = *out.node();
  node.op = op;
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || (in.defined() && in.requires_grad());
  if (!any) return out;
  node.requires_grad = true;
  for (const auto& in : inputs) {
    if (in.defined()) node.parents.push_back(in.node());
  }
  node.backward = std::move(backward);
  return out;
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::initializer_list<Tensor<T>> inputs,
                      const char* op, BackwardFn<T> backward) {
  return make_result(std::move(shape), std::move(data), std::vector<Tensor<T>>(inputs), op,
                     std::move(backward));
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward() on a loss that does not require grad");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), T(0));
  }
  loss.node()->ensure_grad()[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* node = *it;
    if (node->is_leaf()) continue;
    node->backward(*node);
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, const std::vector<Tensor<float>>&,
                                   const char*, BackwardFn<float>);
template Tensor<double> make_result(Shape, std::vector<double>, const std::vector<Tensor<double>>&,
                                    const char*, BackwardFn<double>);
template Tensor<float> make_result(Shape, std::vector<float>, std::initializer_list<Tensor<float>>,
                                   const char*, BackwardFn<float>);
template Tensor<double> make_result(Shape, std::vector<double>,
                                    std::initializer_list<Tensor<double>>, const char*,
                                    BackwardFn<double>);
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace ngi
