#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"

namespace degradelab {

Image make_texture(int size, std::uint64_t seed) {
  if (size <= 0) throw_invalid("texture size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> colour(-0.8, 0.8);
  std::normal_distribution<double> speckle(0.0, 0.06);

  Image im(size, size, ValueDomain::Unit);

  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = colour(rng);
    c1[c] = colour(rng);
  }
  const double angle = unit(rng) * 2.0 * std::numbers::pi;
  const double gx = std::cos(angle), gy = std::sin(angle);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double t =
          0.5 + 0.5 * ((x - size / 2.0) * gx + (y - size / 2.0) * gy) /
                    (0.75 * size);
      for (int c = 0; c < 3; ++c) im.at(c, y, x) = c0[c] + (c1[c] - c0[c]) * t;
    }

  // Stripes: a single oriented sinusoid with a random period.
  const double period = 5.0 + unit(rng) * 20.0;
  const double sa = unit(rng) * std::numbers::pi;
  const double sx = std::cos(sa), sy = std::sin(sa);
  const double amp = 0.05 + 0.15 * unit(rng);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double v =
          amp * std::sin(2.0 * std::numbers::pi * (x * sx + y * sy) / period);
      for (int c = 0; c < 3; ++c) im.at(c, y, x) += v;
    }

  // Hard-edged rectangles and disks.
  const int shapes = 6 + static_cast<int>(unit(rng) * 6);
  for (int s = 0; s < shapes; ++s) {
    double col[3];
    for (double& v : col) v = colour(rng);
    const bool disk = unit(rng) < 0.5;
    const double cx = unit(rng) * size, cy = unit(rng) * size;
    const double rx = (0.05 + 0.2 * unit(rng)) * size;
    const double ry = (0.05 + 0.2 * unit(rng)) * size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0
                                 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) im.at(c, y, x) = col[c];
      }
  }

  for (double& v : im.data) v = std::clamp(v + speckle(rng), -1.0, 1.0);
  return im;
}

std::vector<Image> make_textures(int count, int size, std::uint64_t seed) {
  std::vector<Image> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) out.push_back(make_texture(size, rng()));
  return out;
}

SyntheticData make_synthetic_data(const Kernel2D& kernel, int scale, int count,
                                  int size, int holdout, std::uint64_t seed) {
  if (count <= 0 || holdout < 0) throw_invalid("invalid synthetic set size");
  std::mt19937_64 rng(seed);
  SyntheticData data;
  data.hr = make_textures(count, size, rng());
  data.test_hr = make_textures(holdout, size, rng());
  data.lr.reserve(data.hr.size());
  for (const Image& im : data.hr) {
    data.lr.push_back(normalize(to_byte(degrade(im, kernel, scale))));
  }
  return data;
}

}  // namespace degradelab
