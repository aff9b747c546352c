#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "degradelab/nets.hpp"

namespace fdcheck {

using degradelab::Layer;
using degradelab::Param;
using degradelab::Tensor;

inline Tensor<double> random_tensor(int n, int c, int h, int w,
                                    std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor<double> t(n, c, h, w);
  for (double& v : t.data) v = d(rng);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// ||a - b|| / max(||a||, ||b||, tiny)
inline double rel_error(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-30});
}

struct Result {
  double input_err = 0.0;
  double param_err = 0.0;
  // Coordinates whose +-h probe crosses a ReLU kink: there the central
  // difference at h disagrees with the one at h/10 and is not a valid oracle.
  std::size_t kinked = 0;
  std::size_t total = 0;
  double kinked_fraction() const {
    return total ? static_cast<double>(kinked) / total : 0.0;
  }
};

// Checks d<g, f(x)>/dx and d<g, f(x)>/dtheta against central differences.
// `run` evaluates f; `back` returns the input gradient and fills param grads.
inline Result check(const std::function<Tensor<double>(const Tensor<double>&)>& run,
                    const std::function<Tensor<double>(const Tensor<double>&)>& back,
                    const std::vector<Param<double>*>& params, Tensor<double> x,
                    std::mt19937_64& rng, double h = 1e-3) {
  const Tensor<double> y = run(x);
  const Tensor<double> g = random_tensor(y.n, y.c, y.h, y.w, rng);
  for (auto* p : params) p->zero_grad();
  const Tensor<double> dx = back(g);

  Result r;
  auto central = [&](double& slot, double step) {
    const double keep = slot;
    slot = keep + step;
    const double up = dot(g, run(x));
    slot = keep - step;
    const double down = dot(g, run(x));
    slot = keep;
    return (up - down) / (2 * step);
  };
  auto probe = [&](double& slot, double analytic, std::vector<double>& a,
                   std::vector<double>& n) {
    const double coarse = central(slot, h);
    const double fine = central(slot, h / 10);
    ++r.total;
    const double scale = std::max({std::abs(coarse), std::abs(fine), 1e-6});
    if (std::abs(coarse - fine) > 1e-4 * scale) {
      ++r.kinked;
      return;
    }
    a.push_back(analytic);
    n.push_back(coarse);
  };

  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    probe(x.data[i], dx.data[i], analytic, numeric);
  }
  r.input_err = rel_error(analytic, numeric);

  analytic.clear();
  numeric.clear();
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      probe(p->value[i], p->grad[i], analytic, numeric);
    }
  }
  if (!analytic.empty()) r.param_err = rel_error(analytic, numeric);
  return r;
}

inline Result check_layer(Layer<double>& layer, const Tensor<double>& x,
                          std::mt19937_64& rng) {
  std::vector<Param<double>*> params;
  layer.collect_params(params);
  return check([&](const Tensor<double>& in) { return layer.forward(in); },
               [&](const Tensor<double>& g) { return layer.backward(g, true); },
               params, x, rng);
}

inline Result check_net(degradelab::Net<double>& net, const Tensor<double>& x,
                        std::mt19937_64& rng) {
  return check([&](const Tensor<double>& in) { return net.forward(in); },
               [&](const Tensor<double>& g) { return net.backward(g, true); },
               net.params(), x, rng);
}

}  // namespace fdcheck
