#include "degradelab/tensor.hpp"

#include <cmath>

#include "degradelab/error.hpp"

namespace degradelab {

template <typename T>
Tensor<T> images_to_tensor(std::span<const Image> images) {
  if (images.empty()) throw_invalid("images_to_tensor: empty batch");
  const int h = images[0].height, w = images[0].width;
  Tensor<T> t(static_cast<int>(images.size()), Image::kChannels, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height != h || images[i].width != w) {
      throw_invalid("images_to_tensor: batch images differ in size");
    }
    T* dst = t.sample(static_cast<int>(i));
    for (std::size_t k = 0; k < images[i].data.size(); ++k) {
      dst[k] = static_cast<T>(images[i].data[k]);
    }
  }
  return t;
}

template <typename T>
Image tensor_to_image(const Tensor<T>& t, int index) {
  if (t.c != Image::kChannels) {
    throw_invalid("tensor_to_image: expected 3 channels");
  }
  Image im(t.h, t.w, ValueDomain::Unit);
  const T* src = t.sample(index);
  for (std::size_t k = 0; k < im.data.size(); ++k) {
    im.data[k] = static_cast<double>(src[k]);
  }
  return im;
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

template Tensor<float> images_to_tensor<float>(std::span<const Image>);
template Tensor<double> images_to_tensor<double>(std::span<const Image>);
template Image tensor_to_image<float>(const Tensor<float>&, int);
template Image tensor_to_image<double>(const Tensor<double>&, int);
template bool all_finite<float>(const Tensor<float>&);
template bool all_finite<double>(const Tensor<double>&);

}  // namespace degradelab
