#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nuclick/nn/tensor.hpp"

namespace nuclick::nn {

/// A value in the computation graph plus its (lazily allocated) gradient.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;

  Tensor<T>& grad_buffer() {
    if (grad.numel() != value.numel()) grad = Tensor<T>(value.shape());
    return grad;
  }
  bool has_grad() const { return grad.numel() == value.numel() && !grad.empty(); }
  void zero_grad() { grad = Tensor<T>(); }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> constant(Tensor<T> value) {
  auto v = std::make_shared<Node<T>>();
  v->value = std::move(value);
  return v;
}

template <class T>
Var<T> variable(Tensor<T> value) {
  auto v = constant(std::move(value));
  v->requires_grad = true;
  return v;
}

/// Reverse-mode tape: ops append closures in execution order; backward replays them in reverse.
template <class T>
class Tape {
 public:
  void record(std::function<void()> backward) { steps_.push_back(std::move(backward)); }

  /// Seeds d(root)/d(root) = 1 and propagates to every recorded input.
  void backward(const Var<T>& root) {
    auto& g = root->grad_buffer();
    g.fill(T(1));
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
  }

  void clear() { steps_.clear(); }
  std::size_t size() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
};

/// Execution context for ops. Without a tape nothing is recorded (inference).
template <class T>
struct Context {
  Tape<T>* tape = nullptr;
  bool training = false;

  bool records(std::initializer_list<const Var<T>*> inputs) const {
    if (tape == nullptr) return false;
    for (const auto* v : inputs) {
      if (*v && (*v)->requires_grad) return true;
    }
    return false;
  }
};

}  // namespace nuclick::nn
