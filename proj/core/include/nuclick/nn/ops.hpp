#pragma once

#include <vector>

#include "nuclick/nn/autograd.hpp"

namespace nuclick::nn {

/// Running statistics for batch normalization, one entry per channel.
template <class T>
struct BatchNormState {
  Tensor<T> mean;
  Tensor<T> var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(int channels = 0) : mean({channels}, T(0)), var({channels}, T(1)) {}
};

/// Cross-correlation with zero padding dilation * (k - 1) / 2 ("same" at stride 1).
/// x: (N, Ci, H, W), w: (Co, Ci, k, k), b: (Co).
template <class T>
Var<T> conv2d(Context<T>& ctx, const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride = 1, int dilation = 1);

/// Transposed convolution, kernel 2, stride 2. x: (N, Ci, H, W), w: (Ci, Co, 2, 2), b: (Co).
template <class T>
Var<T> up2(Context<T>& ctx, const Var<T>& x, const Var<T>& w, const Var<T>& b);

/// 2x2 max pooling; H and W must be even.
template <class T>
Var<T> down2(Context<T>& ctx, const Var<T>& x);

template <class T>
Var<T> relu(Context<T>& ctx, const Var<T>& x);

template <class T>
Var<T> sigmoid(Context<T>& ctx, const Var<T>& x);

template <class T>
Var<T> add(Context<T>& ctx, const Var<T>& a, const Var<T>& b);

/// Channel concatenation of rank-4 tensors with equal N, H, W.
template <class T>
Var<T> concat(Context<T>& ctx, const std::vector<Var<T>>& parts);

/// Batch normalization over (N, H, W). Training mode uses batch statistics and
/// updates `state`; eval mode normalizes with the running statistics.
template <class T>
Var<T> batchnorm(Context<T>& ctx, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormState<T>& state);

/// Sum of all elements weighted by `weights` (same shape as x); a scalar of shape {1}.
template <class T>
Var<T> weighted_sum(Context<T>& ctx, const Var<T>& x, const Tensor<T>& weights);

}  // namespace nuclick::nn
