#pragma once

#include <cstdint>
#include <vector>

#include "nuclick/nn/autograd.hpp"

namespace nuclick::nn {

struct AdamOptions {
  double lr = 3e-3;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter first/second moments plus the shared step counter.
template <class T>
struct OptimizerState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
};

/// Decoupled weight decay, then a bias-corrected Adam update. Consumes each
/// parameter's accumulated gradient (missing gradients count as zero).
template <class T>
void adam_step(const std::vector<Var<T>>& params, OptimizerState<T>& state);

template <class T>
void zero_grad(const std::vector<Var<T>>& params) {
  for (const auto& p : params) p->zero_grad();
}

}  // namespace nuclick::nn
