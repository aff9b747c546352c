#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"

namespace degradelab {

/// Reflect uses half-sample symmetric extension (x[-1] = x[0]). Periodic wraps
/// around and makes cascaded degradations compose exactly up to the border.
enum class Boundary { Reflect, Periodic, Valid };

/// Spatial correlation with the kernel's sub-pixel grid.
///
/// Reflect/Periodic: pads (p - s) / 2 in front so that sample s*i of the
/// output is the low-resolution pixel i; the output keeps the input size.
/// Valid: output shrinks to (H - p + 1) x (W - p + 1), out[y][x] covering
/// input rows y..y+p-1; `scale` is ignored.
Image convolve2d(const Image& image, const Kernel2D& kernel,
                 Boundary boundary = Boundary::Reflect, int scale = 1);

struct Phase {
  int y = 0;
  int x = 0;
};

/// out[i][j] = in[s*i + phase.y][s*j + phase.x]. Dimensions must divide by s.
Image decimate(const Image& image, int scale, Phase phase = {});

/// (image * kernel) decimated by `scale`; output is exactly (H/s, W/s).
Image degrade(const Image& image, const Kernel2D& kernel, int scale,
              Boundary boundary = Boundary::Reflect);

/// Adjoint of degrade() with respect to its image argument: maps a gradient
/// on the (H/s, W/s) output back onto an H x W input.
Image degrade_adjoint(const Image& grad_out, const Kernel2D& kernel, int scale,
                      int height, int width,
                      Boundary boundary = Boundary::Reflect);

/// Padding in front of the image used by degrade/convolve2d.
int degrade_padding(int kernel_size, int scale);

/// Bicubic (a = -0.5) interpolation by an integer upscaling factor with
/// pixel-center alignment and symmetric edge extension.
Image upsample_bicubic(const Image& image, int factor);

/// Largest top-left crop whose dimensions divide by `multiple`.
Image crop_to_multiple(const Image& image, int multiple);

struct DatasetEntry {
  std::string role;  // "hr" or "lr"
  std::filesystem::path relative_path;
  std::filesystem::path source;
};

/// Unpaired dataset over disjoint source images.
struct DatasetSplit {
  std::vector<std::filesystem::path> hr_set;
  std::vector<std::filesystem::path> lr_set;
  std::vector<DatasetEntry> entries;
  std::string kernel_id;
  int scale = 2;
};

/// Shuffles the PNGs in hr_dir with `seed`, copies the first
/// round(split_ratio * n) files to out_dir/hr and writes degraded versions of
/// the rest to out_dir/lr. A tab-separated manifest.tsv lists every entry.
DatasetSplit synthesize_dataset(const std::filesystem::path& hr_dir,
                                const Kernel2D& kernel,
                                const std::string& kernel_id, int scale,
                                double split_ratio, std::uint64_t seed,
                                const std::filesystem::path& out_dir);

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& path);

/// Seeded procedural texture in the Unit domain: colour gradients, hard-edged
/// shapes, stripes and fine speckle.
Image make_texture(int size, std::uint64_t seed);
std::vector<Image> make_textures(int count, int size, std::uint64_t seed);

/// Synthetic training and test data for small runs. The LR pool holds 8-bit
/// degraded copies of the HR textures; training samples HR and LR patches
/// independently, so no batch is ever paired. Test textures use a separate
/// seed stream.
struct SyntheticData {
  std::vector<Image> hr;
  std::vector<Image> lr;
  std::vector<Image> test_hr;
};

SyntheticData make_synthetic_data(const Kernel2D& kernel, int scale, int count,
                                  int size, int holdout, std::uint64_t seed);

}  // namespace degradelab
