// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <new>
#include <numeric>
#include <vector>

#include "sist/common/check.hpp"

namespace sist {

// 64-byte aligned storage: keeps every buffer on the same SIMD alignment so
// vectorized kernels take identical code paths run to run (bit-reproducible
// training).
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

// Dense row-major n-d array. Layout conventions across the project:
// images [N,C,H,W], volumes [N,C,D,H,W], codes [N,K].
template <class T>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(count(shape_)), T(0));
  }

  Tensor(std::initializer_list<int64_t> shape)
      : Tensor(std::vector<int64_t>(shape)) {}

  static Tensor full(std::vector<int64_t> shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  T& at5(int64_t n, int64_t c, int64_t d, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(
        (((n * shape_[1] + c) * shape_[2] + d) * shape_[3] + h) * shape_[4] + w)];
  }
  const T& at5(int64_t n, int64_t c, int64_t d, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(
        (((n * shape_[1] + c) * shape_[2] + d) * shape_[3] + h) * shape_[4] + w)];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
  void zero() { fill(T(0)); }

  Tensor reshaped(std::vector<int64_t> shape) const {
    SIST_CHECK(count(shape) == numel(), "reshape element count mismatch");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> t(shape_);
    for (int64_t i = 0; i < numel(); ++i) t[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return t;
  }

  static int64_t count(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      SIST_CHECK(d >= 0, "negative tensor dimension");
      n *= d;
    }
    return n;
  }

private:
  std::vector<int64_t> shape_;
  std::vector<T, AlignedAllocator<T>> data_;
};

}  // namespace sist
