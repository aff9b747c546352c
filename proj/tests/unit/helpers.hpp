#pragma once

#include <filesystem>
#include <random>

#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"

namespace testutil {

inline degradelab::Image random_unit(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  degradelab::Image im(h, w);
  for (double& v : im.data) v = u(rng);
  return im;
}

inline degradelab::Kernel2D random_kernel(int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  degradelab::Kernel2D k(p);
  for (double& v : k.taps()) v = u(rng);
  return k.normalized();
}

// Half-sample symmetric index: x[-1] = x[0].
inline int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - 1 - i;
  return i;
}

// Straight-loop degrade with reflect boundary.
inline degradelab::Image brute_degrade(const degradelab::Image& x,
                                       const degradelab::Kernel2D& k, int s) {
  const int p = k.size();
  const int pad = (p - s) / 2;
  degradelab::Image out(x.height / s, x.width / s, x.domain);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < out.height; ++i)
      for (int j = 0; j < out.width; ++j) {
        double acc = 0.0;
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b) {
            acc += k(a, b) * x.at(c, reflect(s * i + a - pad, x.height),
                                  reflect(s * j + b - pad, x.width));
          }
        out.at(c, i, j) = acc;
      }
  return out;
}

inline double max_abs_diff(const degradelab::Image& a,
                           const degradelab::Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
