#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nuclick/error.hpp"

namespace nuclick {

using Rng = std::mt19937_64;

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct PointF {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointF&, const PointF&) = default;
};

struct Size {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size&, const Size&) = default;
};

/// Row-major 2-D raster. Pixel (x, y) lives at index y * width + x.
template <class T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidInput("negative raster size");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  explicit Raster(Size size, T fill = T{}) : Raster(size.width, size.height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }
  std::size_t pixel_count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool contains(Point p) const { return contains(p.x, p.y); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(Point p) { return (*this)(p.x, p.y); }
  const T& at(Point p) const { return (*this)(p.x, p.y); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using Label = std::uint32_t;
using BinaryMask = Raster<std::uint8_t>;  // 0 = background, 1 = foreground
using LabelMap = Raster<Label>;           // 0 = background, k > 0 = instance k
using DistanceMap = Raster<double>;
using RgbImage = Raster<Rgb>;
using ProbabilityMap = Raster<float>;

inline std::size_t count_foreground(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

inline BinaryMask mask_of(const LabelMap& labels, Label id) {
  BinaryMask m(labels.size());
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) m[i] = labels[i] == id;
  return m;
}

inline BinaryMask foreground_of(const LabelMap& labels) {
  BinaryMask m(labels.size());
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) m[i] = labels[i] != 0;
  return m;
}

inline Label max_label(const LabelMap& labels) {
  Label k = 0;
  for (auto v : labels) k = v > k ? v : k;
  return k;
}

template <class A, class B>
void require_same_size(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (a.size() != b.size()) throw InvalidInput(std::string(what) + ": raster size mismatch");
}

}  // namespace nuclick
