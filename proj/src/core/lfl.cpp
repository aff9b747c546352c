#include "degradelab/lfl.hpp"

#include <cmath>
#include <string>

#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"

namespace degradelab {

int nearest_power_of_two(double extent) {
  if (!(extent > 0.0)) throw_invalid("extent must be positive");
  int lo = 1;
  while (lo * 2 <= extent) lo *= 2;
  const int hi = lo * 2;
  return (extent - lo < hi - extent) ? lo : hi;
}

Kernel2D make_lpf(const LpfSpec& spec, LpfSide side, int scale) {
  if (spec.m < 1) throw_invalid("LPF subsample factor m must be >= 1");
  if (scale < 1) throw_invalid("scale must be >= 1");
  const int factor = side == LpfSide::HR ? scale : 1;
  if (spec.kind == LpfKind::Box) {
    const int side_len = spec.m * factor;
    return Kernel2D(side_len, 1.0 / (static_cast<double>(side_len) * side_len));
  }
  if (!(spec.sigma > 0.0)) throw_invalid("LPF sigma must be positive");
  const double sigma = spec.sigma * factor;
  const int p = nearest_power_of_two(6.0 * sigma);
  return gaussian_kernel({sigma, sigma, 0.0, p});
}

LossResult lfl_loss(const Image& hr, const Image& down, const LpfSpec& spec,
                    int scale) {
  if (hr.height != scale * down.height || hr.width != scale * down.width) {
    throw_invalid("lfl_loss: HR must be exactly " + std::to_string(scale) +
                  "x the downsampled image");
  }
  const int m = spec.m;
  if (down.height % m != 0 || down.width % m != 0) {
    throw_invalid("lfl_loss: downsampled image " +
                  std::to_string(down.height) + "x" +
                  std::to_string(down.width) + " is not divisible by m=" +
                  std::to_string(m));
  }
  const Kernel2D k_hr = make_lpf(spec, LpfSide::HR, scale);
  const Kernel2D k_down = make_lpf(spec, LpfSide::Down, scale);
  const Image ref = degrade(hr, k_hr, m * scale);
  const Image low = degrade(down, k_down, m);

  const double count = static_cast<double>(low.size());
  Image sign(low.height, low.width, low.domain);
  double sum = 0.0;
  for (std::size_t i = 0; i < low.data.size(); ++i) {
    const double d = low.data[i] - ref.data[i];
    sum += std::abs(d);
    sign.data[i] = (d > 0.0) - (d < 0.0);
  }
  for (double& v : sign.data) v /= count;
  LossResult out;
  out.value = sum / count;
  out.grad = degrade_adjoint(sign, k_down, m, down.height, down.width);
  return out;
}

}  // namespace degradelab
