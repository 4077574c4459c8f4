#pragma once

#include <span>

#include "nuclick/nn/autograd.hpp"
#include "nuclick/raster.hpp"

namespace nuclick {

using WeightMap = Raster<double>;

/// alpha = max(sum(excluded) / sum(target), 1).
double weight_alpha(const BinaryMask& target, const BinaryMask& excluded);

/// W = alpha^2 * G + alpha * G_ex + 1. Throws InvalidInput if G is empty or G and G_ex overlap.
WeightMap weight_map(const BinaryMask& target, const BinaryMask& excluded);

struct LossOptions {
  double eps = 1e-6;
  double clamp = 1e-7;
  bool dice_factor_two = false;
};

struct LossTerms {
  double dice = 0.0;
  double cross_entropy = 0.0;
  double total() const { return dice + cross_entropy; }
};

/// Soft dice plus weighted cross entropy for one image:
///   L = 1 - (sum p g + eps) / (sum p + sum g + eps) - (1/n) sum w (g log p + (1 - g) log(1 - p)).
/// p is clamped to [clamp, 1 - clamp] inside the logarithms. When `grad` is
/// nonempty it receives dL/dp (the clamp is treated as identity).
template <class T>
LossTerms hybrid_loss(std::span<const T> p, std::span<const T> g, std::span<const T> w, const LossOptions& options,
                      std::span<T> grad = {});

namespace nn {

/// Batch mean of the per-image hybrid loss for p of shape (N, 1, H, W); targets and weights share that shape.
template <class T>
Var<T> hybrid_loss(Context<T>& ctx, const Var<T>& p, const Tensor<T>& target, const Tensor<T>& weights,
                   const LossOptions& options, LossTerms* terms = nullptr);

}  // namespace nn
}  // namespace nuclick
