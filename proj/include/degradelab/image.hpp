#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace degradelab {

enum class ValueDomain { Unit, Byte };

/// Dense RGB raster stored channel-major: data[(c * height + y) * width + x].
/// Unit-domain values live in [-1, 1], Byte-domain values in [0, 255].
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  ValueDomain domain = ValueDomain::Unit;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, ValueDomain d = ValueDomain::Unit, double fill = 0.0);

  int channels() const { return kChannels; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::size_t size() const { return plane_size() * kChannels; }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width;
  }

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double* row(int c, int y) {
    return data.data() + (static_cast<std::size_t>(c) * height + y) * width;
  }
  const double* row(int c, int y) const {
    return data.data() + (static_cast<std::size_t>(c) * height + y) * width;
  }
  std::span<double> plane(int c) {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }

  Image crop(int top, int left, int h, int w) const;
};

Image load_png(const std::filesystem::path& path);
/// Writes an 8-bit RGB PNG. Byte-domain input is rounded half-up and clamped.
void save_png(const Image& image, const std::filesystem::path& path);

Image normalize(const Image& byte_image);
Image denormalize(const Image& unit_image);
/// Unit images are denormalized first; Byte images are passed through.
Image to_byte(const Image& image);

inline constexpr double kPsnrCap = 99.0;

/// RGB PSNR over Byte-domain images with an optional border crop. Identical
/// inputs report kPsnrCap.
double psnr_rgb(const Image& a, const Image& b, int border = 0);

struct PatchSource {
  int image = 0;
  int top = 0;
  int left = 0;
  bool operator==(const PatchSource&) const = default;
};

struct PatchBatch {
  int patch_size = 0;
  std::vector<Image> images;
  std::vector<PatchSource> source_ids;
  std::size_t count() const { return images.size(); }
};

PatchBatch sample_patches(std::span<const Image> images, int patch_size,
                          int count, std::mt19937_64& rng);
PatchBatch sample_patches(std::span<const Image> images, int patch_size,
                          int count, std::uint64_t seed);

/// Sorted list of *.png files directly inside dir.
std::vector<std::filesystem::path> list_png_files(
    const std::filesystem::path& dir);
std::vector<Image> load_png_dir(const std::filesystem::path& dir);

}  // namespace degradelab
