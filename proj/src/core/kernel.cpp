#include "degradelab/kernel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <system_error>

#include "degradelab/error.hpp"

namespace degradelab {

Kernel2D::Kernel2D(int size, double fill) : size_(size) {
  if (size <= 0) throw_invalid("kernel size must be positive");
  taps_.assign(static_cast<std::size_t>(size) * size, fill);
}

Kernel2D::Kernel2D(int size, std::vector<double> taps)
    : size_(size), taps_(std::move(taps)) {
  if (size <= 0 || taps_.size() != static_cast<std::size_t>(size) * size) {
    throw_invalid("kernel tap count does not match size");
  }
}

double Kernel2D::sum() const {
  double s = 0.0;
  for (double t : taps_) s += t;
  return s;
}

double Kernel2D::l2_norm() const {
  double s = 0.0;
  for (double t : taps_) s += t * t;
  return std::sqrt(s);
}

Kernel2D Kernel2D::normalized() const {
  const double s = sum();
  if (s == 0.0 || !std::isfinite(s)) {
    throw_numeric("cannot normalize a kernel with zero or non-finite sum");
  }
  Kernel2D out = *this;
  for (double& t : out.taps_) t /= s;
  return out;
}

Kernel2D Kernel2D::padded(int new_size) const {
  if (new_size < size_ || (new_size - size_) % 2 != 0) {
    throw_invalid("kernel padding must grow by an even amount");
  }
  const int off = (new_size - size_) / 2;
  Kernel2D out(new_size);
  for (int r = 0; r < size_; ++r)
    for (int c = 0; c < size_; ++c) out(r + off, c + off) = (*this)(r, c);
  return out;
}

Kernel2D gaussian_kernel(const GaussianSpec& spec) {
  if (!(spec.sigma_x > 0.0) || !(spec.sigma_y > 0.0)) {
    throw_invalid("gaussian sigma must be positive");
  }
  if (spec.size <= 0 || spec.size % 2 != 0) {
    throw_invalid("gaussian kernel size must be even and positive");
  }
  const double th = spec.theta_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th);
  const double st = std::sin(th);
  Kernel2D k(spec.size);
  for (int r = 0; r < spec.size; ++r) {
    const double y = k.coord(r);
    for (int c = 0; c < spec.size; ++c) {
      const double x = k.coord(c);
      // Coordinates in the kernel's principal frame (point rotated by -theta).
      const double xr = ct * x + st * y;
      const double yr = -st * x + ct * y;
      k(r, c) = std::exp(-xr * xr / (2 * spec.sigma_x * spec.sigma_x) -
                         yr * yr / (2 * spec.sigma_y * spec.sigma_y));
    }
  }
  return k.normalized();
}

double cubic_weight(double t) {
  const double a = std::abs(t);
  if (a <= 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
  if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
  return 0.0;
}

Kernel2D bicubic_kernel(int scale) {
  if (scale != 2 && scale != 4) {
    throw_invalid("bicubic kernel supports scale 2 or 4, got " +
                  std::to_string(scale));
  }
  const int p = 4 * scale;
  Kernel2D k(p);
  std::vector<double> w(p);
  for (int i = 0; i < p; ++i) {
    w[i] = cubic_weight(k.coord(i) / scale) / scale;
  }
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) k(r, c) = w[r] * w[c];
  return k.normalized();
}

Kernel2D compose_x2(const Kernel2D& k) {
  const int p = k.size();
  const int q = 3 * p - 2;
  Kernel2D out(q);
  // out[c] = sum over 2b + a = c of k[a] k[b], per axis.
  for (int br = 0; br < p; ++br)
    for (int bc = 0; bc < p; ++bc) {
      const double kb = k(br, bc);
      if (kb == 0.0) continue;
      for (int ar = 0; ar < p; ++ar)
        for (int ac = 0; ac < p; ++ac)
          out(2 * br + ar, 2 * bc + ac) += kb * k(ar, ac);
    }
  return out.normalized();
}

double kernel_similarity(const Kernel2D& a, const Kernel2D& b) {
  const double na = a.l2_norm();
  const double nb = b.l2_norm();
  if (na == 0.0 || nb == 0.0) {
    throw_invalid("kernel similarity undefined for an all-zero kernel");
  }
  const int pa = a.size();
  const int pb = b.size();
  double best = -1.0;
  // b shifted by (dy, dx): correlation sum_q a(q) b(q - shift).
  for (int dy = -(pb - 1); dy <= pa - 1; ++dy) {
    for (int dx = -(pb - 1); dx <= pa - 1; ++dx) {
      double s = 0.0;
      const int r0 = std::max(0, dy), r1 = std::min(pa, pb + dy);
      const int c0 = std::max(0, dx), c1 = std::min(pa, pb + dx);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) s += a(r, c) * b(r - dy, c - dx);
      best = std::max(best, s);
    }
  }
  return best / (na * nb);
}

void save_kernel(const Kernel2D& k, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot write kernel file " + path.string());
  out << "KERNEL2D " << k.size() << ' ' << k.size() << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < k.size(); ++r) {
    for (int c = 0; c < k.size(); ++c) {
      if (c) out << ' ';
      out << k(r, c);
    }
    out << '\n';
  }
  if (!out) throw_io("error writing kernel file " + path.string());
}

Kernel2D load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open kernel file " + path.string());
  const std::string where = path.string() + ":";
  std::string line;
  if (!std::getline(in, line)) throw_io(where + "1: empty kernel file");
  std::istringstream header(line);
  std::string magic;
  int rows = 0, cols = 0;
  if (!(header >> magic >> rows >> cols) || magic != "KERNEL2D") {
    throw_io(where + "1: malformed header, expected 'KERNEL2D <p> <p>'");
  }
  if (rows != cols) throw_io(where + "1: non-square kernel header");
  if (rows <= 0) throw_io(where + "1: kernel size must be positive");
  Kernel2D k(rows);
  for (int r = 0; r < rows; ++r) {
    const int lineno = r + 2;
    if (!std::getline(in, line)) {
      throw_io(where + std::to_string(lineno) + ": missing kernel row " +
               std::to_string(r + 1) + " of " + std::to_string(rows));
    }
    std::istringstream row(line);
    for (int c = 0; c < cols; ++c) {
      if (!(row >> k(r, c))) {
        throw_io(where + std::to_string(lineno) + ": expected " +
                 std::to_string(cols) + " values");
      }
    }
    std::string extra;
    if (row >> extra) {
      throw_io(where + std::to_string(lineno) + ": too many values in row");
    }
  }
  return k;
}

GaussianSpec benchmark_gaussian(int index) {
  switch (index) {
    case 1: return {1.0, 1.0, 0.0, 20};
    case 2: return {1.6, 1.6, 0.0, 20};
    case 3: return {1.0, 2.0, 0.0, 20};
    case 4: return {1.0, 2.0, 29.0, 20};
    default: throw_invalid("benchmark gaussian index must be 1..4");
  }
}

Kernel2D benchmark_kernel(int index) {
  if (index == 0) return bicubic_kernel(2);
  return gaussian_kernel(benchmark_gaussian(index));
}

}  // namespace degradelab
