#include "degradelab/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"

namespace degradelab {

namespace {

struct RowRef {
  int sample;
  int channel;
  int i;
  int j;
};

constexpr double kConditionFloor = 1e-12;

}  // namespace

LsqSystem build_system(const ImageFn& downsampler,
                       std::span<const Image> hr_samples, int support,
                       int scale, const BuildOptions& options) {
  if (hr_samples.empty()) throw_invalid("build_system needs at least one sample");
  if (support <= 0 || scale < 1) throw_invalid("invalid support or scale");
  const int pad = degrade_padding(support, scale);

  std::vector<Image> outputs;
  outputs.reserve(hr_samples.size());
  std::vector<RowRef> refs;
  for (std::size_t n = 0; n < hr_samples.size(); ++n) {
    const Image& hr = hr_samples[n];
    if (hr.height % scale != 0 || hr.width % scale != 0) {
      throw_invalid("sample dimensions must divide by the scale");
    }
    Image out = downsampler(hr);
    if (out.height * scale != hr.height || out.width * scale != hr.width) {
      throw_invalid("downsampler output has the wrong size for scale " +
                    std::to_string(scale));
    }
    // Valid LR pixels: s*i - pad >= 0 and s*i - pad + p - 1 <= H - 1.
    auto first = [&](int) { return (pad + scale - 1) / scale; };
    auto last = [&](int len) {
      const int num = len - support + pad;
      return num < 0 ? -1 : num / scale;
    };
    const int i0 = std::max(0, first(hr.height));
    const int i1 = std::min(out.height - 1, last(hr.height));
    const int j0 = std::max(0, first(hr.width));
    const int j1 = std::min(out.width - 1, last(hr.width));
    for (int c = 0; c < Image::kChannels; ++c)
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
          refs.push_back({static_cast<int>(n), c, i, j});
    outputs.push_back(std::move(out));
  }

  const std::size_t cols = static_cast<std::size_t>(support) * support;
  if (refs.size() < cols) {
    throw_invalid("insufficient data for kernel retrieval: " +
                  std::to_string(refs.size()) + " valid rows for " +
                  std::to_string(cols) + " unknowns; use more or larger samples");
  }
  if (options.max_rows > 0 && refs.size() > options.max_rows &&
      options.max_rows >= cols) {
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> idx(refs.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < options.max_rows; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    idx.resize(options.max_rows);
    std::sort(idx.begin(), idx.end());
    std::vector<RowRef> kept;
    kept.reserve(idx.size());
    for (std::size_t k : idx) kept.push_back(refs[k]);
    refs = std::move(kept);
  }

  LsqSystem sys;
  sys.support = support;
  sys.scale = scale;
  sys.n_samples = static_cast<int>(hr_samples.size());
  sys.design.resize(static_cast<Eigen::Index>(refs.size()),
                    static_cast<Eigen::Index>(cols));
  sys.rhs.resize(static_cast<Eigen::Index>(refs.size()));
  for (std::size_t row = 0; row < refs.size(); ++row) {
    const RowRef& r = refs[row];
    const Image& hr = hr_samples[r.sample];
    const int y0 = scale * r.i - pad;
    const int x0 = scale * r.j - pad;
    for (int a = 0; a < support; ++a) {
      const double* src = hr.row(r.channel, y0 + a) + x0;
      for (int b = 0; b < support; ++b) {
        sys.design(static_cast<Eigen::Index>(row), a * support + b) = src[b];
      }
    }
    sys.rhs(static_cast<Eigen::Index>(row)) =
        outputs[r.sample].at(r.channel, r.i, r.j);
  }
  return sys;
}

KernelFit fit_kernel(const LsqSystem& system) {
  const Eigen::Index n = system.design.cols();
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(system.design.transpose());
  normal = normal.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd atb = system.design.transpose() * system.rhs;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const double max_pivot = pivots.maxCoeff();
  const double min_pivot = pivots.minCoeff();

  KernelFit fit;
  fit.pivot_ratio = max_pivot > 0.0 ? min_pivot / max_pivot : 0.0;

  Eigen::VectorXd solution;
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() == Eigen::Success && fit.pivot_ratio > kConditionFloor) {
    solution = llt.solve(atb);
  } else {
    const double ridge = 1e-8 * normal.trace() / static_cast<double>(n);
    // Directions whose curvature is below the ridge are decided by the
    // regularizer rather than the data.
    const auto weak = (pivots.array() <= ridge).count();
    if (max_pivot == 0.0 || weak > 0) {
      throw_numeric("kernel retrieval system is rank-deficient (" +
                    std::to_string(weak) + " of " + std::to_string(n) +
                    " directions unconstrained); supply more or more diverse "
                    "HR samples");
    }
    Eigen::MatrixXd reg = normal;
    reg.diagonal().array() += ridge;
    const Eigen::LLT<Eigen::MatrixXd> reg_llt(reg);
    if (reg_llt.info() != Eigen::Success) {
      throw_numeric("ridge-regularized kernel system failed to factorize");
    }
    solution = reg_llt.solve(atb);
    fit.used_ridge = true;
  }
  if (!solution.allFinite()) throw_numeric("kernel solution is not finite");

  const int p = system.support;
  fit.kernel = Kernel2D(p, std::vector<double>(solution.data(),
                                               solution.data() + n));
  return fit;
}

Kernel2D retrieve_kernel(const LsqSystem& system) {
  return fit_kernel(system).kernel;
}

double lsq_residual(const LsqSystem& system, const Kernel2D& k) {
  if (k.size() != system.support) throw_invalid("kernel size mismatch");
  const Eigen::Map<const Eigen::VectorXd> w(k.taps().data(),
                                            system.design.cols());
  return (system.design * w - system.rhs).squaredNorm();
}

LossResult adl_loss(const Image& hr, const Image& down, const Kernel2D& k,
                    int scale) {
  if (hr.height != scale * down.height || hr.width != scale * down.width) {
    throw_invalid("adl_loss: shape mismatch between HR and downsampled image");
  }
  const Image ref = degrade(hr, k, scale);
  const double count = static_cast<double>(down.size());
  LossResult out;
  out.grad = Image(down.height, down.width, down.domain);
  double sum = 0.0;
  for (std::size_t i = 0; i < down.data.size(); ++i) {
    const double d = down.data[i] - ref.data[i];
    sum += std::abs(d);
    out.grad.data[i] = ((d > 0.0) - (d < 0.0)) / count;
  }
  out.value = sum / count;
  return out;
}

}  // namespace degradelab
