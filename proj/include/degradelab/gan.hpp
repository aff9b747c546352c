#pragma once

#include "degradelab/nets.hpp"

namespace degradelab {

/// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] inside logs.
inline constexpr double kProbFloor = 1e-7;

/// L_F = -E[log F(lr)] - E[log(1 - F(down))], averaged over the probability
/// map and the batch. Zeroes F's gradients, then accumulates dL_F/dtheta_F.
template <typename T>
double discriminator_loss(Net<T>& disc, const Tensor<T>& lr,
                          const Tensor<T>& down);

/// Non-saturating generator loss L_adv = -E[log F(down)]. Writes dL_adv/ddown
/// into grad_down without touching F's parameter gradients.
template <typename T>
double adversarial_loss(Net<T>& disc, const Tensor<T>& down,
                        Tensor<T>& grad_down);

template <typename T>
struct GanLosses {
  double l_adv = 0.0;
  double l_f = 0.0;
  Tensor<T> grad_down;  // dL_adv / ddown
};

/// Both objectives against the same discriminator state.
template <typename T>
GanLosses<T> gan_losses(Net<T>& disc, const Tensor<T>& down,
                        const Tensor<T>& lr);

}  // namespace degradelab
