#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"
#include "degradelab/lfl.hpp"

namespace degradelab {

/// Any image -> image map treated as a black-box downsampler.
using ImageFn = std::function<Image(const Image&)>;

/// Least-squares system for a shared p x p kernel. Each row is one colour
/// channel of one low-resolution output pixel whose HR window lies fully
/// inside its sample, laid out exactly as degrade() reads it.
struct LsqSystem {
  Eigen::MatrixXd design;
  Eigen::VectorXd rhs;
  int support = 0;
  int scale = 0;
  int n_samples = 0;
};

struct BuildOptions {
  std::size_t max_rows = 200000;  // rows beyond this are subsampled
  std::uint64_t seed = 0;
};

LsqSystem build_system(const ImageFn& downsampler,
                       std::span<const Image> hr_samples, int support,
                       int scale, const BuildOptions& options = {});

struct KernelFit {
  Kernel2D kernel;  // raw least-squares solution, not renormalized
  bool used_ridge = false;
  double pivot_ratio = 0.0;  // smallest / largest LDLT pivot of A^T A
};

/// Solves the normal equations by Cholesky; falls back to a ridge of
/// 1e-8 * trace / p^2 when the system is ill-conditioned.
KernelFit fit_kernel(const LsqSystem& system);
Kernel2D retrieve_kernel(const LsqSystem& system);

/// Sum of squared residuals of the system at kernel k.
double lsq_residual(const LsqSystem& system, const Kernel2D& k);

/// Mean |degrade(hr, k, s) - down| with the reference treated as constant;
/// the gradient is with respect to `down`.
LossResult adl_loss(const Image& hr, const Image& down, const Kernel2D& k,
                    int scale);

}  // namespace degradelab
