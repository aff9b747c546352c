#pragma once

#include <cstdint>
#include <vector>

#include "degradelab/tensor.hpp"

namespace degradelab {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam moments for a fixed parameter list.
template <typename T>
struct AdamState {
  std::vector<AlignedVector<T>> m;
  std::vector<AlignedVector<T>> v;
  std::int64_t t = 0;
};

/// One Adam update from the accumulated gradients; the state is sized lazily
/// on the first call. Gradients are left untouched.
template <typename T>
void adam_step(const std::vector<Param<T>*>& params, const AdamConfig& config,
               AdamState<T>& state);

}  // namespace degradelab
