#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "nuclick/morph.hpp"
#include "nuclick/signals.hpp"
#include "oracles.hpp"

using namespace nuclick;

namespace {

LabelMap two_discs() {
  LabelMap l(40, 30, 0);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (std::hypot(x - 10, y - 15) <= 6) l(x, y) = 1;
      if (std::hypot(x - 27, y - 15) <= 7) l(x, y) = 2;
    }
  }
  return l;
}

BinaryMask ring(int canvas, double r_out, double r_in) {
  BinaryMask m(canvas, canvas);
  const double c = (canvas - 1) / 2.0;
  for (int y = 0; y < canvas; ++y) {
    for (int x = 0; x < canvas; ++x) {
      const double d = std::hypot(x - c, y - c);
      m(x, y) = d <= r_out && d > r_in;
    }
  }
  return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

PatchSpec unit_window(int x, int y, int size) { return PatchSpec{{x, y}, {size, size}}; }

}  // namespace

TEST(ClickSignal, SingleClickHasNoExclusion) {
  const auto s = signals::click_signal({{10, 10}}, 0, unit_window(0, 0, 32));
  EXPECT_EQ(count_foreground(s.inclusion), 1u);
  EXPECT_EQ(s.inclusion(10, 10), 1);
  EXPECT_EQ(count_foreground(s.exclusion), 0u);
}

TEST(ClickSignal, ThreeClicks) {
  const auto s = signals::click_signal({{3, 3}, {10, 10}, {20, 5}}, 1, unit_window(0, 0, 32));
  EXPECT_EQ(count_foreground(s.inclusion), 1u);
  EXPECT_EQ(count_foreground(s.exclusion), 2u);
  EXPECT_EQ(s.exclusion(3, 3), 1);
  EXPECT_EQ(s.exclusion(20, 5), 1);
}

TEST(ClickSignal, OutsideClicksDropped) {
  const auto w = unit_window(8, 8, 16);
  const auto s = signals::click_signal({{2, 2}, {12, 12}, {20, 20}, {40, 40}}, 1, w);
  EXPECT_EQ(s.inclusion(4, 4), 1);
  EXPECT_EQ(count_foreground(s.exclusion), 1u);
  EXPECT_EQ(s.exclusion(12, 12), 1);
  EXPECT_THROW(signals::click_signal({{2, 2}}, 0, w), InvalidInput);
}

TEST(TrainSignalNucleus, Properties) {
  const auto gt = two_discs();
  const auto d = oracle::edt(mask_of(gt, 1));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto s = signals::train_signal_nucleus(gt, 1, rng);
    ASSERT_EQ(count_foreground(s.inclusion), 1u);
    ASSERT_EQ(count_foreground(s.exclusion), 1u);
    for (std::size_t k = 0; k < gt.pixel_count(); ++k) {
      if (s.inclusion[k]) {
        EXPECT_EQ(gt[k], 1u);
        EXPECT_GE(d[k], 2.0);
      }
      if (s.exclusion[k]) EXPECT_EQ(gt[k], 2u);
      EXPECT_FALSE(s.inclusion[k] && s.exclusion[k]);
    }
  }
  EXPECT_THROW(signals::train_signal_nucleus(gt, 7, rng), NotFound);
}

TEST(TrainSignalNucleus, SingleInstanceHasNoExclusion) {
  LabelMap gt(20, 20, 0);
  for (int y = 5; y < 15; ++y) {
    for (int x = 5; x < 15; ++x) gt(x, y) = 1;
  }
  Rng rng(1);
  EXPECT_EQ(count_foreground(signals::train_signal_nucleus(gt, 1, rng).exclusion), 0u);
}

TEST(TrainSignalNucleus, NewSeedsMoveTheInclusion) {
  const auto gt = two_discs();
  std::set<std::pair<int, int>> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto s = signals::train_signal_nucleus(gt, 2, rng);
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        if (s.inclusion(x, y)) seen.insert({x, y});
      }
    }
  }
  EXPECT_GT(seen.size(), 10u);
}

TEST(TrainSignalGland, TauZeroIsSkeletonOfMask) {
  const auto m = ring(41, 16, 7);
  EXPECT_EQ(signals::gland_inclusion_at(m, 0.0), morph::skeletonize(m));
}

TEST(TrainSignalGland, DiskThresholdsAreConcentric) {
  BinaryMask m(31, 31);
  for (int y = 0; y < 31; ++y) {
    for (int x = 0; x < 31; ++x) m(x, y) = std::hypot(x - 15, y - 15) <= 10;
  }
  const double upper = signals::gland_tau_upper(m);
  const auto d = oracle::edt(m);
  double sum = 0;
  double sum2 = 0;
  double n = 0;
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    if (!m[i]) continue;
    sum += d[i];
    sum2 += d[i] * d[i];
    n += 1;
  }
  const double mu = sum / n;
  EXPECT_NEAR(upper, mu + std::sqrt(sum2 / n - mu * mu), 1e-9);
  for (double tau : {0.0, upper * 0.5, upper * 0.9}) {
    const auto inc = signals::gland_inclusion_at(m, tau);
    for (int y = 0; y < 31; ++y) {
      for (int x = 0; x < 31; ++x) {
        if (inc(x, y)) {
          EXPECT_GT(d(x, y), tau);
          EXPECT_LE(std::hypot(x - 15, y - 15), 10.0 - tau + 1.5);
        }
      }
    }
  }
}

TEST(TrainSignalGland, AnnulusGivesLoopAndSubset) {
  const auto m = ring(41, 16, 7);
  const auto inc = signals::gland_inclusion_at(m, 0.5);
  EXPECT_EQ(oracle::components(inc), 1);
  EXPECT_EQ(oracle::holes(inc), 1);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto s = signals::train_signal_gland(m, rng);
    EXPECT_TRUE(subset(s.signal.inclusion, m));
    EXPECT_GT(count_foreground(s.signal.inclusion), 0u);
    EXPECT_GE(s.tau, 0.0);
    EXPECT_LE(s.tau, signals::gland_tau_upper(m));
  }
  EXPECT_THROW(signals::train_signal_gland(BinaryMask(10, 10), rng), InvalidInput);
}

TEST(TrainSignalGland, ExclusionFromOtherGlands) {
  LabelMap gt(60, 30, 0);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 60; ++x) {
      if (std::hypot(x - 14, y - 15) <= 10) gt(x, y) = 1;
      if (std::hypot(x - 44, y - 15) <= 10) gt(x, y) = 2;
    }
  }
  Rng rng(4);
  const auto s = signals::train_signal_gland(gt, 1, rng);
  EXPECT_EQ(count_foreground(s.signal.exclusion), 1u);
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (s.signal.exclusion[i]) EXPECT_EQ(gt[i], 2u);
    if (s.signal.inclusion[i]) EXPECT_EQ(gt[i], 1u);
  }
}

TEST(RasterizeSquiggle, Basics) {
  const auto w = unit_window(0, 0, 20);
  const auto single = signals::rasterize_squiggle(Squiggle{{{{4, 5}}}}, w);
  EXPECT_EQ(count_foreground(single), 1u);
  EXPECT_EQ(single(4, 5), 1);
  const auto row = signals::rasterize_squiggle(Squiggle{{{{2, 3}, {9, 3}}}}, w);
  EXPECT_EQ(count_foreground(row), 8u);
  for (int x = 2; x <= 9; ++x) EXPECT_EQ(row(x, 3), 1);
  EXPECT_THROW(signals::rasterize_squiggle(Squiggle{{{{40, 40}}}}, w), InvalidInput);
  EXPECT_THROW(signals::rasterize_squiggle(Squiggle{}, w), InvalidInput);
}

TEST(RasterizeSquiggle, DiagonalIsEightConnectedStaircase) {
  const auto w = unit_window(0, 0, 30);
  Rng rng(6);
  std::uniform_int_distribution<int> c(0, 29);
  for (int i = 0; i < 30; ++i) {
    const Point a{c(rng), c(rng)};
    const Point b{c(rng), c(rng)};
    const auto m = signals::rasterize_squiggle(Squiggle{{{{double(a.x), double(a.y)}, {double(b.x), double(b.y)}}}}, w);
    const std::size_t expected = std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) + 1;
    EXPECT_EQ(count_foreground(m), expected);
    EXPECT_EQ(oracle::components(m), 1);
    EXPECT_EQ(m.at(a), 1);
    EXPECT_EQ(m.at(b), 1);
  }
}

TEST(RasterizeSquiggle, DownscaledLineSurvives) {
  PatchSpec w{{0, 0}, {64, 64}, 700.0 / 64, 1.0};
  const auto m = signals::rasterize_squiggle(Squiggle{{{{0, 10}, {699, 10}}}}, w);
  for (int x = 0; x < 64; ++x) EXPECT_EQ(m(x, 10), 1) << x;
}

TEST(PatchForClick, Placement) {
  EXPECT_EQ(signals::patch_for_click({512, 512}, {256, 256}, 128).origin, (Point{192, 192}));
  EXPECT_EQ(signals::patch_for_click({512, 512}, {5, 5}, 128).origin, (Point{0, 0}));
  EXPECT_EQ(signals::patch_for_click({512, 512}, {510, 2}, 128).origin, (Point{384, 0}));
}

TEST(PatchForClick, SmallImageMirrorPadsAndRoundTrips) {
  const auto w = signals::patch_for_click({100, 100}, {50, 50}, 128);
  EXPECT_EQ(w.size, (Size{128, 128}));
  EXPECT_EQ(w.origin, (Point{-14, -14}));
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      const Point p = w.image_to_patch(Point{x, y});
      ASSERT_TRUE(w.contains_patch_pixel(p));
      ASSERT_EQ(w.patch_to_image(p), (Point{x, y}));
    }
  }
  RgbImage im(100, 100);
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) im(x, y) = Rgb{std::uint8_t(x), std::uint8_t(y), 0};
  }
  const auto patch = signals::extract_image(im, w);
  EXPECT_EQ(patch(14, 14), (Rgb{0, 0, 0}));
  EXPECT_EQ(patch(13, 14), (Rgb{0, 0, 0}));  // mirrored copy of column 0
  EXPECT_EQ(patch(12, 20), (Rgb{1, 6, 0}));
  EXPECT_EQ(patch(113, 113), (Rgb{99, 99, 0}));
  EXPECT_EQ(patch(114, 113), (Rgb{99, 99, 0}));
}

TEST(PatchForSquiggle, Rules) {
  const Squiggle small{{{{300, 300}, {399, 379}}}};
  const auto a = signals::patch_for_squiggle({1024, 1024}, small, 512);
  EXPECT_EQ(a.size, (Size{512, 512}));
  EXPECT_EQ(a.scale_x, 1.0);
  EXPECT_EQ(a.scale_y, 1.0);
  EXPECT_LE(a.origin.x, 300);
  EXPECT_GE(a.origin.x + 512, 400);

  const Squiggle wide{{{{100, 200}, {799, 499}}}};
  const auto b = signals::patch_for_squiggle({1024, 1024}, wide, 512);
  EXPECT_EQ(b.size, (Size{512, 512}));
  EXPECT_DOUBLE_EQ(b.scale_x, 700.0 / 512.0);
  EXPECT_EQ(b.scale_y, 1.0);
  EXPECT_EQ(b.origin.x, 100);
  EXPECT_EQ(b.extent_x(), 700);
  for (int x = 100; x < 800; x += 7) {
    const Point p = b.image_to_patch(Point{x, 300});
    ASSERT_TRUE(b.contains_patch_pixel(p));
    const Point back = b.patch_to_image(p);
    EXPECT_LE(std::abs(back.x - x), 2);
  }

  const Squiggle exact{{{{10, 20}, {521, 531}}}};
  const auto c = signals::patch_for_squiggle({1024, 1024}, exact, 512);
  EXPECT_EQ(c.origin, (Point{10, 20}));
  EXPECT_EQ(c.scale_x, 1.0);
  EXPECT_EQ(c.scale_y, 1.0);
}

TEST(JitterClick, Contract) {
  Rng rng(5);
  EXPECT_EQ(signals::jitter_click({10, 10}, 0.0, {50, 50}, rng), (Point{10, 10}));
  for (int i = 0; i < 10000; ++i) {
    const Point p = signals::jitter_click({25, 25}, 2.0, {50, 50}, rng);
    ASSERT_LE(std::hypot(p.x - 25, p.y - 25), 2.0);
  }
  const Point edge = signals::jitter_click({0, 0}, 2.0, {50, 50}, rng);
  EXPECT_GE(edge.x, 0);
  EXPECT_GE(edge.y, 0);
  Rng a(9);
  Rng b(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(signals::jitter_click({25, 25}, 2.0, {50, 50}, a), signals::jitter_click({25, 25}, 2.0, {50, 50}, b));
}

TEST(DisplaceClick, FixedDistance) {
  Rng rng(5);
  EXPECT_EQ(signals::displace_click({10, 10}, 0.0, {50, 50}, rng), (Point{10, 10}));
  for (int i = 0; i < 1000; ++i) {
    const Point p = signals::displace_click({25, 25}, 3.0, {50, 50}, rng);
    EXPECT_NEAR(std::hypot(p.x - 25, p.y - 25), 3.0, 0.75);
  }
}

TEST(GuideSignal, ExcludesAnchorsInWindowOnly) {
  const auto w = unit_window(0, 0, 32);
  GuideInput click{GuideInput::Kind::Click, {{10, 10}}};
  const auto s = signals::guide_signal(click, {{12, 12}, {50, 50}}, w);
  EXPECT_EQ(s.inclusion(10, 10), 1);
  EXPECT_EQ(count_foreground(s.exclusion), 1u);
  EXPECT_EQ(s.exclusion(12, 12), 1);
  GuideInput sq{GuideInput::Kind::Squiggle, {{2, 2}, {2, 8}, {2, 20}}};
  EXPECT_EQ(sq.anchor(), (Point{2, 8}));
  const auto t = signals::guide_signal(sq, {{2, 5}}, w);
  EXPECT_EQ(count_foreground(t.exclusion), 0u);
}
