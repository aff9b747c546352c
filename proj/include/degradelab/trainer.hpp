#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degradelab/adam.hpp"
#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"
#include "degradelab/lfl.hpp"
#include "degradelab/linearize.hpp"
#include "degradelab/nets.hpp"

namespace degradelab {

enum class DataTerm { LFL, ADL, FixedBicubic, FixedAvgPool };

const char* data_term_name(DataTerm term);
DataTerm parse_data_term(const std::string& name);

inline constexpr int kPaperEpochIterations = 1741;

struct TrainConfig {
  DataTerm data_term = DataTerm::ADL;
  double alpha = 100.0;      // weight of ADL and the fixed-operator terms
  double alpha_lfl = 200.0;  // weight of the LFL term
  LpfSpec lfl;
  AdamConfig adam{5e-5, 0.9, 0.999, 1e-8};
  int t_warmup = 10 * kPaperEpochIterations;
  int t_update = 10 * kPaperEpochIterations;
  int iters = 80 * kPaperEpochIterations;
  int batch = 32;
  int hr_patch = 128;
  int scale = 2;
  std::uint64_t seed = 0;
  int n_lsq_samples = 50;
  int kernel_support = 20;
  std::size_t max_lsq_rows = 200000;
  int down_width = 64;
  int down_blocks = 4;
  int disc_width = 64;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct TrainRecord {
  int iter = 0;
  double l_data = 0.0;
  double l_adv = 0.0;
  double l_f = 0.0;
  std::optional<double> similarity;
  bool kernel_updated = false;
};

struct KernelSnapshot {
  int iter = 0;
  Kernel2D kernel;
  std::optional<double> similarity;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::vector<KernelSnapshot> snapshots;

  /// Columns: iter,l_data,l_adv,l_f,similarity (empty when unknown).
  void write_csv(const std::filesystem::path& path) const;
  static TrainLog read_csv(const std::filesystem::path& path);
};

/// Per-iteration view handed to an optional observer, after losses are
/// computed and before the downsampler update.
struct IterationTrace {
  int iter = 0;
  const std::vector<Image>* hr = nullptr;
  const std::vector<Image>* down = nullptr;
  const Kernel2D* kernel = nullptr;  // current retrieved kernel, if any
  DataTerm active_term = DataTerm::LFL;
  double l_data = 0.0;
};

using TrainObserver = std::function<void(const IterationTrace&)>;
using ProgressFn = std::function<void(const TrainRecord&, int total)>;

struct DownsamplerResult {
  Net<float> down;
  Net<float> disc;
  AdamState<float> down_adam;
  std::optional<Kernel2D> kernel;  // last retrieved kernel (raw)
  TrainLog log;
};

/// The adversarial downsampler training loop: discriminator step, then data
/// term (LFL during warm-up, then ADL with the kernel re-estimated every
/// t_update iterations), then downsampler step on alpha * L_data + L_adv.
/// Iterations are numbered from 0; retrievals happen at iterations i >=
/// t_warmup with i % t_update == 0, or whenever no kernel exists yet.
DownsamplerResult train_downsampler(const TrainConfig& config,
                                    std::span<const Image> hr_set,
                                    std::span<const Image> lr_set,
                                    const std::optional<Kernel2D>& gt_kernel,
                                    const TrainObserver& observer = {},
                                    const ProgressFn& progress = {});

/// Single-application wrapper around a private copy of the network.
ImageFn downsampler_fn(const Net<float>& net);
/// D o D: a x2 downsampler applied twice.
ImageFn compose_downsampler(const Net<float>& net_x2);
ImageFn compose_fns(const ImageFn& first, const ImageFn& second);
ImageFn kernel_downsampler_fn(const Kernel2D& kernel, int scale);

/// Retrieves the kernel of a black-box downsampler from `n_samples` random
/// HR patches.
KernelFit retrieve_from_fn(const ImageFn& fn, std::span<const Image> hr_pool,
                           int patch, int n_samples, int support, int scale,
                           std::uint64_t seed, std::size_t max_rows = 200000);

struct SrConfig {
  int width = 32;
  int blocks = 4;
  int scale = 2;
  AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
  int iters = 1000;
  int batch = 16;
  int lr_patch = 48;
  int halve_every = 50000;  // iterations between learning-rate halvings
  std::uint64_t seed = 0;
  bool quantize = true;  // round generated LR images to 8 bits

  void validate() const;
};

struct SrResult {
  Net<float> sr;
  TrainLog log;
};

/// Supervised L1 training on (downsampler(HR), HR) pairs. The LR pool is
/// generated once per image; the downsampler receives no gradient.
SrResult train_sr(const SrConfig& config, const ImageFn& downsampler,
                  std::span<const Image> hr_set, const ProgressFn& progress = {});

ImageFn sr_fn(const Net<float>& net);
ImageFn bicubic_upsampler(int scale);

struct EvalRow {
  std::string image;
  std::optional<double> psnr_down;
  std::optional<double> psnr_sr;
  double psnr_bicubic = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalRow mean;
  void write_csv(const std::filesystem::path& path) const;
};

/// (a) PSNR(down(HR), GT LR) and (b) PSNR(SR(GT LR), HR) plus the bicubic
/// upsampling baseline, all 8-bit, border-cropped by the kernel half-support
/// (or `border_hr` HR pixels when non-negative).
EvalReport eval_protocols(const ImageFn* down, const ImageFn* sr,
                          std::span<const Image> test_hr,
                          std::span<const std::string> names,
                          const Kernel2D& gt_kernel, int scale,
                          int border_hr = -1);

}  // namespace degradelab
