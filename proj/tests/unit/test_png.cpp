#include <gtest/gtest.h>

#include "nuclick/png_io.hpp"
#include "oracles.hpp"

using namespace nuclick;

TEST(Png, RgbRoundTrip) {
  RgbImage im(7, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) im(x, y) = Rgb{std::uint8_t(x * 30), std::uint8_t(y * 50), std::uint8_t(x + y)};
  }
  const auto bytes = png::encode_rgb(im);
  EXPECT_EQ(png::decode_rgb(bytes), im);
  EXPECT_EQ(png::encode_rgb(im), bytes);
}

TEST(Png, MaskIsZeroOr255) {
  Rng rng(1);
  const auto m = oracle::random_bits(9, 6, 0.5, rng);
  const auto bytes = png::encode_mask(m);
  EXPECT_EQ(png::decode_mask(bytes), m);
  const auto gray = png::decode_labels(bytes);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) EXPECT_EQ(gray[i], m[i] ? 255u : 0u);
}

TEST(Png, SixteenBitLabels) {
  LabelMap l(4, 3, 0);
  l(0, 0) = 1;
  l(1, 0) = 300;
  l(3, 2) = 65535;
  EXPECT_EQ(png::decode_labels(png::encode_labels(l)), l);
  LabelMap big(2, 2, 0);
  big(0, 0) = 70000;
  EXPECT_THROW(png::encode_labels(big), InvalidInput);
}

TEST(Png, GarbageIsRejected) {
  EXPECT_THROW(png::decode_rgb({1, 2, 3, 4}), InvalidInput);
  EXPECT_THROW(png::read_file("/nonexistent/file.png"), IoError);
}
