#pragma once

#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"

namespace degradelab {

enum class LpfKind { Box, Gaussian };

/// Which operand a filter applies to. The HR side is scaled by s in both
/// support (m*s) and width (sigma*s).
enum class LpfSide { Down, HR };

struct LpfSpec {
  LpfKind kind = LpfKind::Box;
  int m = 16;
  double sigma = 2.0;
};

/// Nearest power of two to `extent` (ties round up), at least 1.
int nearest_power_of_two(double extent);

Kernel2D make_lpf(const LpfSpec& spec, LpfSide side = LpfSide::Down,
                  int scale = 1);

/// Scalar loss value with its gradient with respect to one image operand.
struct LossResult {
  double value = 0.0;
  Image grad;
};

/// Mean absolute difference between the HR image filtered and subsampled by
/// m*s and the downsampled image filtered and subsampled by m. Box filters
/// reduce to non-overlapping block means. The gradient is with respect to
/// `down` and uses sign(0) = 0.
LossResult lfl_loss(const Image& hr, const Image& down, const LpfSpec& spec,
                    int scale);

}  // namespace degradelab
