#include "degradelab/gan.hpp"

#include <algorithm>
#include <cmath>

#include "degradelab/error.hpp"

namespace degradelab {

namespace {

// -mean(log(target ? p : 1 - p)) and its gradient with respect to p.
template <typename T>
double bce_term(const Tensor<T>& prob, bool target, Tensor<T>& grad) {
  grad = Tensor<T>(prob.n, prob.c, prob.h, prob.w);
  const double count = static_cast<double>(prob.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prob.data.size(); ++i) {
    const double p = prob.data[i];
    const double q = target ? p : 1.0 - p;
    if (!std::isfinite(q)) throw_numeric("non-finite discriminator output");
    const double qc = std::max(q, kProbFloor);
    sum -= std::log(qc);
    const double dq = q > kProbFloor ? -1.0 / q : 0.0;
    grad.data[i] = static_cast<T>((target ? dq : -dq) / count);
  }
  return sum / count;
}

}  // namespace

template <typename T>
double discriminator_loss(Net<T>& disc, const Tensor<T>& lr,
                          const Tensor<T>& down) {
  disc.zero_grad();
  Tensor<T> grad;
  const double real = bce_term(disc.forward(lr), true, grad);
  disc.backward(grad, true);
  const double fake = bce_term(disc.forward(down), false, grad);
  disc.backward(grad, true);
  return real + fake;
}

template <typename T>
double adversarial_loss(Net<T>& disc, const Tensor<T>& down,
                        Tensor<T>& grad_down) {
  Tensor<T> grad;
  const double loss = bce_term(disc.forward(down), true, grad);
  grad_down = disc.backward(grad, false);
  return loss;
}

template <typename T>
GanLosses<T> gan_losses(Net<T>& disc, const Tensor<T>& down,
                        const Tensor<T>& lr) {
  GanLosses<T> out;
  out.l_adv = adversarial_loss(disc, down, out.grad_down);
  out.l_f = discriminator_loss(disc, lr, down);
  return out;
}

template double discriminator_loss<float>(Net<float>&, const Tensor<float>&,
                                          const Tensor<float>&);
template double discriminator_loss<double>(Net<double>&, const Tensor<double>&,
                                           const Tensor<double>&);
template double adversarial_loss<float>(Net<float>&, const Tensor<float>&,
                                        Tensor<float>&);
template double adversarial_loss<double>(Net<double>&, const Tensor<double>&,
                                         Tensor<double>&);
template GanLosses<float> gan_losses<float>(Net<float>&, const Tensor<float>&,
                                            const Tensor<float>&);
template GanLosses<double> gan_losses<double>(Net<double>&,
                                              const Tensor<double>&,
                                              const Tensor<double>&);

}  // namespace degradelab
