#include "nuclick/loss.hpp"

#include <algorithm>
#include <cmath>

namespace nuclick {

double weight_alpha(const BinaryMask& target, const BinaryMask& excluded) {
  require_same_size(target, excluded, "weight_map");
  const auto g = static_cast<double>(count_foreground(target));
  if (g == 0.0) throw InvalidInput("weight_map: target mask is empty");
  return std::max(static_cast<double>(count_foreground(excluded)) / g, 1.0);
}

WeightMap weight_map(const BinaryMask& target, const BinaryMask& excluded) {
  const double alpha = weight_alpha(target, excluded);
  WeightMap w(target.size(), 1.0);
  for (std::size_t i = 0; i < target.pixel_count(); ++i) {
    if (target[i] && excluded[i]) throw InvalidInput("weight_map: target and excluded masks overlap");
    if (target[i]) w[i] = alpha * alpha + 1.0;
    if (excluded[i]) w[i] = alpha + 1.0;
  }
  return w;
}

template <class T>
LossTerms hybrid_loss(std::span<const T> p, std::span<const T> g, std::span<const T> w, const LossOptions& options,
                      std::span<T> grad) {
  const std::size_t n = p.size();
  if (g.size() != n || w.size() != n || (!grad.empty() && grad.size() != n)) throw InvalidInput("hybrid_loss: size mismatch");
  if (n == 0) throw InvalidInput("hybrid_loss: empty input");
  const double k = options.dice_factor_two ? 2.0 : 1.0;
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  double ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = static_cast<double>(p[i]);
    const double gi = static_cast<double>(g[i]);
    const double pc = std::clamp(pi, options.clamp, 1.0 - options.clamp);
    inter += pi * gi;
    sum_p += pi;
    sum_g += gi;
    ce += static_cast<double>(w[i]) * (gi * std::log(pc) + (1.0 - gi) * std::log(1.0 - pc));
  }
  const double num = k * inter + options.eps;
  const double den = sum_p + sum_g + options.eps;
  LossTerms terms;
  terms.dice = 1.0 - num / den;
  terms.cross_entropy = -ce / static_cast<double>(n);
  if (!grad.empty()) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = static_cast<double>(g[i]);
      const double pc = std::clamp(static_cast<double>(p[i]), options.clamp, 1.0 - options.clamp);
      const double d_dice = -(k * gi * den - num) / (den * den);
      const double d_ce = -static_cast<double>(w[i]) * inv_n * (gi / pc - (1.0 - gi) / (1.0 - pc));
      grad[i] = static_cast<T>(d_dice + d_ce);
    }
  }
  return terms;
}

template LossTerms hybrid_loss(std::span<const float>, std::span<const float>, std::span<const float>, const LossOptions&,
                               std::span<float>);
template LossTerms hybrid_loss(std::span<const double>, std::span<const double>, std::span<const double>,
                               const LossOptions&, std::span<double>);

namespace nn {

template <class T>
Var<T> hybrid_loss(Context<T>& ctx, const Var<T>& p, const Tensor<T>& target, const Tensor<T>& weights,
                   const LossOptions& options, LossTerms* terms) {
  const auto& s = p->value.shape();
  if (s.size() != 4 || s[1] != 1) throw InvalidInput("hybrid_loss: expected (N, 1, H, W) predictions");
  if (!target.same_shape(p->value) || !weights.same_shape(p->value)) throw InvalidInput("hybrid_loss: shape mismatch");
  const int batch = s[0];
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  Tensor<T> grad(s);
  LossTerms sum;
  for (int n = 0; n < batch; ++n) {
    const std::size_t o = static_cast<std::size_t>(n) * plane;
    const auto t = nuclick::hybrid_loss<T>(std::span<const T>(p->value.data() + o, plane),
                                           std::span<const T>(target.data() + o, plane),
                                           std::span<const T>(weights.data() + o, plane), options,
                                           std::span<T>(grad.data() + o, plane));
    sum.dice += t.dice / batch;
    sum.cross_entropy += t.cross_entropy / batch;
  }
  for (auto& v : grad.storage()) v /= static_cast<T>(batch);
  if (terms) *terms = sum;

  auto out = std::make_shared<Node<T>>();
  out->value = Tensor<T>({1}, static_cast<T>(sum.total()));
  out->requires_grad = ctx.records({&p});
  if (!out->requires_grad) return out;
  std::weak_ptr<Node<T>> wo = out;
  ctx.tape->record([p, wo, grad = std::move(grad)]() {
    auto o = wo.lock();
    if (!o || !o->has_grad()) return;
    auto& dp = p->grad_buffer();
    for (std::size_t i = 0; i < dp.numel(); ++i) dp[i] += o->grad[0] * grad[i];
  });
  return out;
}

template Var<float> hybrid_loss(Context<float>&, const Var<float>&, const Tensor<float>&, const Tensor<float>&,
                                const LossOptions&, LossTerms*);
template Var<double> hybrid_loss(Context<double>&, const Var<double>&, const Tensor<double>&, const Tensor<double>&,
                                 const LossOptions&, LossTerms*);

}  // namespace nn
}  // namespace nuclick
