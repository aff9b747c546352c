#include "degradelab/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "degradelab/error.hpp"

namespace degradelab {

Image::Image(int h, int w, ValueDomain d, double fill)
    : height(h), width(w), domain(d) {
  if (h <= 0 || w <= 0) {
    throw_invalid("image dimensions must be positive, got " +
                  std::to_string(h) + "x" + std::to_string(w));
  }
  data.assign(size(), fill);
}

Image Image::crop(int top, int left, int h, int w) const {
  if (top < 0 || left < 0 || h <= 0 || w <= 0 || top + h > height ||
      left + w > width) {
    throw_invalid("crop window out of bounds");
  }
  Image out(h, w, domain);
  for (int c = 0; c < kChannels; ++c) {
    for (int y = 0; y < h; ++y) {
      const double* src = row(c, top + y) + left;
      std::copy(src, src + w, out.row(c, y));
    }
  }
  return out;
}

Image normalize(const Image& byte_image) {
  if (byte_image.domain != ValueDomain::Byte) {
    throw_invalid("normalize expects a Byte-domain image");
  }
  Image out = byte_image;
  out.domain = ValueDomain::Unit;
  for (double& v : out.data) v = v / 127.5 - 1.0;
  return out;
}

Image denormalize(const Image& unit_image) {
  if (unit_image.domain != ValueDomain::Unit) {
    throw_invalid("denormalize expects a Unit-domain image");
  }
  Image out = unit_image;
  out.domain = ValueDomain::Byte;
  for (double& v : out.data) {
    const double b = std::floor((v + 1.0) * 127.5 + 0.5);
    v = std::clamp(b, 0.0, 255.0);
  }
  return out;
}

Image to_byte(const Image& image) {
  return image.domain == ValueDomain::Byte ? image : denormalize(image);
}

double psnr_rgb(const Image& a, const Image& b, int border) {
  if (!a.same_shape(b)) {
    throw_invalid("psnr shape mismatch: " + std::to_string(a.height) + "x" +
                  std::to_string(a.width) + " vs " + std::to_string(b.height) +
                  "x" + std::to_string(b.width));
  }
  if (a.domain != ValueDomain::Byte || b.domain != ValueDomain::Byte) {
    throw_invalid("psnr expects Byte-domain images");
  }
  if (border < 0 || 2 * border >= a.height || 2 * border >= a.width) {
    throw_invalid("psnr border crop leaves no pixels");
  }
  double sse = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = border; y < a.height - border; ++y) {
      for (int x = border; x < a.width - border; ++x) {
        const double d = a.at(c, y, x) - b.at(c, y, x);
        sse += d * d;
        ++n;
      }
    }
  }
  const double mse = sse / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

PatchBatch sample_patches(std::span<const Image> images, int patch_size,
                          int count, std::mt19937_64& rng) {
  if (images.empty()) throw_invalid("sample_patches: empty image set");
  if (patch_size <= 0 || count < 0) {
    throw_invalid("sample_patches: invalid patch size or count");
  }
  for (const Image& im : images) {
    if (patch_size > std::min(im.height, im.width)) {
      throw_invalid("patch size " + std::to_string(patch_size) +
                    " exceeds image " + std::to_string(im.height) + "x" +
                    std::to_string(im.width));
    }
  }
  PatchBatch batch;
  batch.patch_size = patch_size;
  batch.images.reserve(count);
  batch.source_ids.reserve(count);
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(images.size()) - 1);
  for (int i = 0; i < count; ++i) {
    const int idx = pick(rng);
    const Image& im = images[idx];
    std::uniform_int_distribution<int> top(0, im.height - patch_size);
    std::uniform_int_distribution<int> left(0, im.width - patch_size);
    PatchSource src{idx, top(rng), left(rng)};
    batch.images.push_back(im.crop(src.top, src.left, patch_size, patch_size));
    batch.source_ids.push_back(src);
  }
  return batch;
}

PatchBatch sample_patches(std::span<const Image> images, int patch_size,
                          int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_patches(images, patch_size, count, rng);
}

}  // namespace degradelab
