#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <string>
#include <span>
#include <vector>

#include "degradelab/image.hpp"

namespace degradelab {

/// 64-byte aligned storage. Vectorized GEMM kernels pick their peeling from
/// the runtime address, so fixed alignment keeps results bitwise repeatable.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW batch.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  AlignedVector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  T* sample(int i) { return data.data() + i * sample_size(); }
  const T* sample(int i) const { return data.data() + i * sample_size(); }
  T& at(int ni, int ci, int y, int x) {
    return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
  }
  T at(int ni, int ci, int y, int x) const {
    return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
  }
};

template <typename T>
Tensor<T> images_to_tensor(std::span<const Image> images);
template <typename T>
Image tensor_to_image(const Tensor<T>& t, int index);
template <typename T>
bool all_finite(const Tensor<T>& t);

/// Learnable array with its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  AlignedVector<T> value;
  AlignedVector<T> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

}  // namespace degradelab
