#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nuclick/loss.hpp"
#include "oracles.hpp"

using namespace nuclick;

namespace {

// Reference values from tests/support/loss_oracle.py.
constexpr double kDice = 0.7499998125000469;
constexpr double kCe = 1.0397207708399179;
constexpr double kTotal = 1.7897205833399648;

BinaryMask first_n(int w, int h, int n, int skip = 0) {
  BinaryMask m(w, h);
  for (int i = skip; i < skip + n; ++i) m[i] = 1;
  return m;
}

LossTerms loss_of(const std::vector<double>& p, const std::vector<double>& g, const std::vector<double>& w,
                  std::vector<double>* grad = nullptr, LossOptions opt = {}) {
  std::vector<double> scratch(grad ? p.size() : 0);
  auto t = hybrid_loss<double>(p, g, w, opt, scratch);
  if (grad) *grad = scratch;
  return t;
}

}  // namespace

TEST(WeightMap, NoExclusion) {
  const auto g = first_n(10, 10, 20);
  const auto w = weight_map(g, BinaryMask(10, 10));
  EXPECT_EQ(weight_alpha(g, BinaryMask(10, 10)), 1.0);
  for (std::size_t i = 0; i < w.pixel_count(); ++i) EXPECT_EQ(w[i], g[i] ? 2.0 : 1.0);
}

TEST(WeightMap, AlphaThree) {
  const auto g = first_n(40, 20, 100);
  const auto ex = first_n(40, 20, 300, 200);
  const auto w = weight_map(g, ex);
  EXPECT_EQ(weight_alpha(g, ex), 3.0);
  for (std::size_t i = 0; i < w.pixel_count(); ++i) EXPECT_EQ(w[i], g[i] ? 10.0 : ex[i] ? 4.0 : 1.0);
}

TEST(WeightMap, AlphaClampsToOne) {
  const auto g = first_n(20, 10, 100);
  const auto ex = first_n(20, 10, 50, 120);
  const auto w = weight_map(g, ex);
  EXPECT_EQ(weight_alpha(g, ex), 1.0);
  for (std::size_t i = 0; i < w.pixel_count(); ++i) EXPECT_EQ(w[i], g[i] ? 2.0 : ex[i] ? 2.0 : 1.0);
}

TEST(WeightMap, Errors) {
  EXPECT_THROW(weight_map(BinaryMask(4, 4), BinaryMask(4, 4)), InvalidInput);
  EXPECT_THROW(weight_map(first_n(4, 4, 3), first_n(4, 4, 3)), InvalidInput);
  EXPECT_THROW(weight_map(first_n(4, 4, 3), BinaryMask(5, 4)), InvalidInput);
}

TEST(WeightMap, OrderingWhenExclusionDominates) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto g = oracle::random_bits(12, 12, 0.1, rng);
    if (!count_foreground(g)) continue;
    BinaryMask ex(12, 12);
    for (std::size_t i = 0; i < ex.pixel_count(); ++i) ex[i] = !g[i] && (i % 3 != 0);
    const double a = weight_alpha(g, ex);
    const auto w = weight_map(g, ex);
    for (std::size_t i = 0; i < w.pixel_count(); ++i) {
      const double expect = g[i] ? a * a + 1 : ex[i] ? a + 1 : 1.0;
      EXPECT_EQ(w[i], expect);
    }
    EXPECT_GE(a * a + 1, a + 1);
  }
}

TEST(Loss, HandEvaluatedCase) {
  const std::vector<double> p(4, 0.5);
  const std::vector<double> g = {1, 1, 0, 0};
  const std::vector<double> w = {2, 2, 1, 1};
  const auto t = loss_of(p, g, w);
  EXPECT_NEAR(t.dice, kDice, 1e-12);
  EXPECT_NEAR(t.cross_entropy, kCe, 1e-12);
  EXPECT_NEAR(t.total(), kTotal, 1e-12);
  EXPECT_NEAR(t.dice, 0.75, 1e-6);
  EXPECT_NEAR(t.cross_entropy, 1.03972, 1e-5);
}

TEST(Loss, PerfectPredictionAsPrinted) {
  const std::vector<double> g = {1, 0, 1, 0, 0, 1};
  const std::vector<double> w(6, 1.0);
  const auto t = loss_of(g, g, w);
  EXPECT_NEAR(t.cross_entropy, 0.0, 1e-5);
  EXPECT_NEAR(t.dice, 0.5, 1e-6);
  LossOptions two;
  two.dice_factor_two = true;
  EXPECT_NEAR(loss_of(g, g, w, nullptr, two).dice, 0.0, 1e-6);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::bernoulli_distribution b(0.4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + trial;
    std::vector<double> p(n), g(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      g[i] = b(rng);
      w[i] = 1.0 + 3.0 * u(rng);
    }
    LossOptions opt;
    opt.dice_factor_two = trial % 2;
    std::vector<double> grad;
    loss_of(p, g, w, &grad, opt);
    const double h = 1e-6;
    double diff2 = 0;
    double norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto q = p;
      q[i] += h;
      const double up = loss_of(q, g, w, nullptr, opt).total();
      q[i] -= 2 * h;
      const double dn = loss_of(q, g, w, nullptr, opt).total();
      const double num = (up - dn) / (2 * h);
      diff2 += (num - grad[i]) * (num - grad[i]);
      norm += num * num + grad[i] * grad[i];
    }
    EXPECT_LT(std::sqrt(diff2 / norm), 1e-5);
  }
}

TEST(Loss, TensorLossGradientMatchesFiniteDifferences) {
  Rng rng(8);
  auto p = oracle::random_tensor({2, 1, 3, 3}, rng, 0.05, 0.95);
  nn::Tensor<double> g({2, 1, 3, 3});
  nn::Tensor<double> w({2, 1, 3, 3});
  for (std::size_t i = 0; i < g.numel(); ++i) {
    g[i] = (i * 7) % 3 == 0;
    w[i] = 1.0 + (i % 4);
  }
  const auto err = oracle::gradient_error(
      [&](nn::Context<double>& ctx, const std::vector<nn::Var<double>>& v) {
        return nn::hybrid_loss(ctx, v[0], g, w, LossOptions{});
      },
      {p});
  EXPECT_LT(err, 1e-5);
}

TEST(Loss, PermutationInvariant) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> p(12), g(12), w(12);
  for (int i = 0; i < 12; ++i) {
    p[i] = u(rng);
    g[i] = i % 3 == 0;
    w[i] = 1 + i % 2;
  }
  std::vector<std::size_t> idx(12);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> p2, g2, w2;
  for (auto i : idx) {
    p2.push_back(p[i]);
    g2.push_back(g[i]);
    w2.push_back(w[i]);
  }
  EXPECT_NEAR(loss_of(p, g, w).total(), loss_of(p2, g2, w2).total(), 1e-12);
}

TEST(Loss, CrossEntropyDropsWhenPixelMovesTowardTarget) {
  std::vector<double> p = {0.3, 0.6, 0.2, 0.9};
  const std::vector<double> g = {1, 0, 0, 1};
  const std::vector<double> w = {2, 1, 1, 2};
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto q = p;
    q[i] += g[i] ? 0.05 : -0.05;
    EXPECT_LT(loss_of(q, g, w).cross_entropy, loss_of(p, g, w).cross_entropy);
  }
}

TEST(Loss, Errors) {
  EXPECT_THROW(loss_of({0.5}, {1, 0}, {1}), InvalidInput);
  EXPECT_THROW(loss_of({}, {}, {}), InvalidInput);
}
