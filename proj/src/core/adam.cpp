#include "degradelab/adam.hpp"

#include <cmath>

#include "degradelab/error.hpp"

namespace degradelab {

template <typename T>
void adam_step(const std::vector<Param<T>*>& params, const AdamConfig& config,
               AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->size(), T(0));
      state.v.emplace_back(p->size(), T(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw_invalid("adam state does not match the parameter list");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k];
      const double mk = config.beta1 * m[k] + (1.0 - config.beta1) * g;
      const double vk = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step =
          config.lr * (mk / c1) / (std::sqrt(vk / c2) + config.eps);
      p.value[k] = static_cast<T>(p.value[k] - step);
    }
  }
}

template void adam_step<float>(const std::vector<Param<float>*>&,
                               const AdamConfig&, AdamState<float>&);
template void adam_step<double>(const std::vector<Param<double>*>&,
                                const AdamConfig&, AdamState<double>&);

}  // namespace degradelab
