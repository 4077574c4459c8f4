#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nuclick/error.hpp"

namespace nuclick::nn {

/// Cache-line aligned storage. Vectorised kernels split work by address alignment, so a fixed
/// alignment keeps floating-point results identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense row-major tensor. Rank-4 tensors are laid out (N, C, H, W).
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape, T fill = T(0)) : shape_(std::move(shape)) {
    for (int d : shape_) {
      if (d < 0) throw InvalidInput("negative tensor dimension");
    }
    data_.assign(count(shape_), fill);
  }

  static std::size_t count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  int n() const { return dim(0); }
  int c() const { return dim(1); }
  int h() const { return dim(2); }
  int w() const { return dim(3); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  AlignedVector<T>& storage() { return data_; }
  const AlignedVector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  AlignedVector<T> data_;
};

std::string shape_string(const std::vector<int>& shape);

template <class To, class From>
Tensor<To> cast(const Tensor<From>& t) {
  Tensor<To> out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) out[i] = static_cast<To>(t[i]);
  return out;
}

}  // namespace nuclick::nn
