#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace degradelab {

/// Square 2D kernel on a sub-pixel grid. Tap (row, col) sits at coordinate
/// (row - (p-1)/2, col - (p-1)/2), so an even-sized kernel has its origin
/// between the four middle taps. Taps are stored row-major.
class Kernel2D {
 public:
  Kernel2D() = default;
  explicit Kernel2D(int size, double fill = 0.0);
  Kernel2D(int size, std::vector<double> taps);

  int size() const { return size_; }
  double operator()(int row, int col) const { return taps_[row * size_ + col]; }
  double& operator()(int row, int col) { return taps_[row * size_ + col]; }
  std::span<const double> taps() const { return taps_; }
  std::span<double> taps() { return taps_; }

  /// Offset of tap index i from the kernel origin.
  double coord(int i) const { return i - 0.5 * (size_ - 1); }

  double sum() const;
  double l2_norm() const;
  Kernel2D normalized() const;
  /// Zero-pads symmetrically to `new_size`; the size difference must be even.
  Kernel2D padded(int new_size) const;

 private:
  int size_ = 0;
  std::vector<double> taps_;
};

struct GaussianSpec {
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double theta_deg = 0.0;
  int size = 20;
};

/// Rotated anisotropic Gaussian sampled on the sub-pixel grid, normalized to
/// unit sum. x runs along columns, y along rows; theta rotates the principal
/// axes counter-clockwise in that (x, y) frame.
Kernel2D gaussian_kernel(const GaussianSpec& spec);

/// Cubic-convolution weight with a = -0.5.
double cubic_weight(double t);

/// Antialiased bicubic downsampling kernel for scale 2 or 4: 4s taps per side,
/// w(x) = W(x / s) / s, separable, normalized.
Kernel2D bicubic_kernel(int scale);

/// Kernel k convolved with its 2x-dilated copy: degrading twice at x2 with k
/// equals degrading once at x4 with the result. Output size is 3p - 2.
Kernel2D compose_x2(const Kernel2D& k);

/// Max over integer shifts of the normalized cross-correlation.
double kernel_similarity(const Kernel2D& a, const Kernel2D& b);

void save_kernel(const Kernel2D& k, const std::filesystem::path& path);
Kernel2D load_kernel(const std::filesystem::path& path);

/// The five x2 benchmark kernels: 0 is bicubic, 1..4 are Gaussians
/// (sigma_x, sigma_y, theta) = (1,1,0), (1.6,1.6,0), (1,2,0), (1,2,29).
Kernel2D benchmark_kernel(int index);
GaussianSpec benchmark_gaussian(int index);

}  // namespace degradelab
