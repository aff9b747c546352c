#include "degradelab/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <system_error>

#include "degradelab/checkpoint.hpp"
#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"
#include "degradelab/gan.hpp"

namespace degradelab {

const char* data_term_name(DataTerm term) {
  switch (term) {
    case DataTerm::LFL: return "lfl";
    case DataTerm::ADL: return "adl";
    case DataTerm::FixedBicubic: return "bicubic";
    case DataTerm::FixedAvgPool: return "avgpool";
  }
  return "unknown";
}

DataTerm parse_data_term(const std::string& name) {
  if (name == "lfl") return DataTerm::LFL;
  if (name == "adl") return DataTerm::ADL;
  if (name == "bicubic") return DataTerm::FixedBicubic;
  if (name == "avgpool") return DataTerm::FixedAvgPool;
  throw_config("unknown data term '" + name +
               "' (expected lfl, adl, bicubic or avgpool)");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw_config(what); };
  if (scale != 2) bad("train.scale must be 2; larger scales compose x2 models");
  if (iters <= 0) bad("train.iters must be positive");
  if (t_warmup < 0 || t_warmup > iters) bad("train.t_warmup must lie in [0, iters]");
  if (t_update <= 0) bad("train.t_update must be positive");
  if (batch <= 0) bad("train.batch must be positive");
  if (hr_patch <= 0 || hr_patch % (2 * scale) != 0) {
    bad("train.hr_patch must be a positive multiple of 2*scale");
  }
  if (data_term == DataTerm::LFL || data_term == DataTerm::ADL) {
    if ((hr_patch / scale) % lfl.m != 0) {
      bad("LR patch size must be divisible by lfl.m");
    }
  }
  if (!(adam.lr > 0.0)) bad("train.eta must be positive");
  if (n_lsq_samples <= 0) bad("kernel.samples must be positive");
  if (kernel_support <= 0 || (kernel_support - scale) % 2 != 0) {
    bad("kernel.support must be positive with (support - scale) even");
  }
  if (down_width <= 0 || down_blocks < 0 || disc_width <= 0) {
    bad("invalid network widths");
  }
}

void SrConfig::validate() const {
  auto bad = [](const std::string& what) { throw_config(what); };
  if (width <= 0 || blocks < 0 || scale < 1) bad("invalid SR network size");
  if (iters <= 0 || batch <= 0 || lr_patch <= 0) bad("invalid SR schedule");
  if (halve_every <= 0) bad("sr.halve_every must be positive");
  if (!(adam.lr > 0.0)) bad("sr.eta must be positive");
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void TrainLog::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot write log " + path.string());
  out << "iter,l_data,l_adv,l_f,similarity\n";
  for (const auto& r : records) {
    out << r.iter << ',' << fmt_double(r.l_data) << ',' << fmt_double(r.l_adv)
        << ',' << fmt_double(r.l_f) << ',';
    if (r.similarity) out << fmt_double(*r.similarity);
    out << '\n';
  }
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("iter,l_data,l_adv,l_f,similarity", 0) != 0) {
    throw_io(path.string() + ":1: unexpected header '" + line + "'");
  }
  TrainLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() == 4) f.emplace_back();
    if (f.size() != 5) {
      throw_io(path.string() + ":" + std::to_string(lineno) +
               ": expected 5 columns");
    }
    try {
      TrainRecord r;
      r.iter = std::stoi(f[0]);
      r.l_data = f[1].empty() ? std::nan("") : std::stod(f[1]);
      r.l_adv = f[2].empty() ? std::nan("") : std::stod(f[2]);
      r.l_f = f[3].empty() ? std::nan("") : std::stod(f[3]);
      if (!f[4].empty()) r.similarity = std::stod(f[4]);
      log.records.push_back(r);
    } catch (const std::exception&) {
      throw_io(path.string() + ":" + std::to_string(lineno) +
               ": malformed number");
    }
  }
  return log;
}

ImageFn downsampler_fn(const Net<float>& net) {
  auto copy = std::make_shared<Net<float>>(net);
  return [copy](const Image& hr) { return apply_net(*copy, hr); };
}

ImageFn compose_fns(const ImageFn& first, const ImageFn& second) {
  return [first, second](const Image& hr) { return second(first(hr)); };
}

ImageFn compose_downsampler(const Net<float>& net_x2) {
  const ImageFn once = downsampler_fn(net_x2);
  return compose_fns(once, once);
}

ImageFn kernel_downsampler_fn(const Kernel2D& kernel, int scale) {
  return [kernel, scale](const Image& hr) {
    const Image* src = &hr;
    Image unit;
    if (hr.domain == ValueDomain::Byte) {
      unit = normalize(hr);
      src = &unit;
    }
    return degrade(*src, kernel, scale);
  };
}

KernelFit retrieve_from_fn(const ImageFn& fn, std::span<const Image> hr_pool,
                           int patch, int n_samples, int support, int scale,
                           std::uint64_t seed, std::size_t max_rows) {
  std::mt19937_64 rng(seed);
  PatchBatch samples = sample_patches(hr_pool, patch, n_samples, rng);
  BuildOptions opts;
  opts.max_rows = max_rows;
  opts.seed = rng();
  const LsqSystem sys = build_system(fn, samples.images, support, scale, opts);
  return fit_kernel(sys);
}

namespace {

std::vector<Image> to_images(const Tensor<float>& t) {
  std::vector<Image> out;
  out.reserve(t.n);
  for (int i = 0; i < t.n; ++i) out.push_back(tensor_to_image(t, i));
  return out;
}

void add_scaled(Tensor<float>& dst, int index, const Image& grad,
                double factor) {
  float* d = dst.sample(index);
  for (std::size_t k = 0; k < grad.data.size(); ++k) {
    d[k] += static_cast<float>(factor * grad.data[k]);
  }
}

// Mean |ref - down| and its gradient with respect to down.
LossResult l1_to_reference(const Image& ref, const Image& down) {
  LossResult out;
  out.grad = Image(down.height, down.width, down.domain);
  const double count = static_cast<double>(down.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < down.data.size(); ++i) {
    const double d = down.data[i] - ref.data[i];
    sum += std::abs(d);
    out.grad.data[i] = ((d > 0.0) - (d < 0.0)) / count;
  }
  out.value = sum / count;
  return out;
}

std::vector<Image> patches_unit(PatchBatch&& batch) {
  for (Image& im : batch.images) {
    if (im.domain == ValueDomain::Byte) im = normalize(im);
  }
  return std::move(batch.images);
}

}  // namespace

DownsamplerResult train_downsampler(const TrainConfig& config,
                                    std::span<const Image> hr_set,
                                    std::span<const Image> lr_set,
                                    const std::optional<Kernel2D>& gt_kernel,
                                    const TrainObserver& observer,
                                    const ProgressFn& progress) {
  config.validate();
  if (hr_set.empty() || lr_set.empty()) {
    throw_invalid("train_downsampler needs non-empty HR and LR sets");
  }
  const int s = config.scale;
  const int lr_patch = config.hr_patch / s;

  DownsamplerResult res{build_downsampler<float>(config.down_width,
                                                 config.down_blocks, s),
                        build_discriminator<float>(config.disc_width),
                        {},
                        std::nullopt,
                        {}};
  std::mt19937_64 rng(config.seed);
  init_params(res.down, rng());
  init_params(res.disc, rng());
  const std::uint64_t retrieval_seed = rng();
  AdamState<float> disc_adam;

  std::optional<Kernel2D> fixed_ref;
  if (config.data_term == DataTerm::FixedBicubic) fixed_ref = bicubic_kernel(s);
  if (config.data_term == DataTerm::FixedAvgPool) fixed_ref = Kernel2D(s, 1.0 / (s * s));

  int bad_streak = 0;
  int retrievals = 0;
  for (int it = 0; it < config.iters; ++it) {
    TrainRecord rec;
    rec.iter = it;

    const bool adaptive = config.data_term == DataTerm::ADL;
    const bool lfl_phase =
        config.data_term == DataTerm::LFL || (adaptive && it < config.t_warmup);
    if (adaptive && !lfl_phase && (it % config.t_update == 0 || !res.kernel)) {
      // The downsampler has not changed since the previous update, so
      // retrieving before this iteration's forward pass sees the same D.
      const KernelFit fit = retrieve_from_fn(
          downsampler_fn(res.down), hr_set, config.hr_patch,
          config.n_lsq_samples, config.kernel_support, s,
          retrieval_seed + static_cast<std::uint64_t>(retrievals++),
          config.max_lsq_rows);
      res.kernel = fit.kernel;
      rec.kernel_updated = true;
      KernelSnapshot snap{it, fit.kernel, std::nullopt};
      if (gt_kernel) snap.similarity = kernel_similarity(fit.kernel, *gt_kernel);
      res.log.snapshots.push_back(std::move(snap));
    }
    if (res.kernel && gt_kernel) {
      rec.similarity = res.log.snapshots.back().similarity;
    }

    const std::vector<Image> hr =
        patches_unit(sample_patches(hr_set, config.hr_patch, config.batch, rng));
    const std::vector<Image> lr =
        patches_unit(sample_patches(lr_set, lr_patch, config.batch, rng));
    const Tensor<float> hr_t = images_to_tensor<float>(hr);
    const Tensor<float> lr_t = images_to_tensor<float>(lr);

    const Tensor<float> down_t = res.down.forward(hr_t);
    bool finite = all_finite(down_t);

    Tensor<float> grad(down_t.n, down_t.c, down_t.h, down_t.w);
    if (finite) {
      rec.l_f = discriminator_loss(res.disc, lr_t, down_t);
      finite = std::isfinite(rec.l_f);
      if (finite) adam_step(res.disc.params(), config.adam, disc_adam);
    }

    std::vector<Image> down;
    if (finite) {
      down = to_images(down_t);
      double l_data = 0.0;
      double weight = lfl_phase ? config.alpha_lfl : config.alpha;
      for (int n = 0; n < down_t.n; ++n) {
        LossResult term;
        if (lfl_phase) {
          term = lfl_loss(hr[n], down[n], config.lfl, s);
        } else if (adaptive) {
          term = adl_loss(hr[n], down[n], *res.kernel, s);
        } else {
          term = l1_to_reference(degrade(hr[n], *fixed_ref, s), down[n]);
        }
        l_data += term.value / down_t.n;
        add_scaled(grad, n, term.grad, weight / down_t.n);
      }
      rec.l_data = l_data;

      Tensor<float> grad_adv;
      rec.l_adv = adversarial_loss(res.disc, down_t, grad_adv);
      for (std::size_t k = 0; k < grad.data.size(); ++k) {
        grad.data[k] += grad_adv.data[k];
      }
      finite = std::isfinite(rec.l_data) && std::isfinite(rec.l_adv) &&
               all_finite(grad);
    }

    if (observer && finite) {
      IterationTrace trace;
      trace.iter = it;
      trace.hr = &hr;
      trace.down = &down;
      trace.kernel = res.kernel ? &*res.kernel : nullptr;
      trace.active_term = lfl_phase ? DataTerm::LFL : config.data_term;
      trace.l_data = rec.l_data;
      observer(trace);
    }

    if (finite) {
      bad_streak = 0;
      res.down.zero_grad();
      res.down.backward(grad, true);
      adam_step(res.down.params(), config.adam, res.down_adam);
    } else {
      if (!std::isfinite(rec.l_f)) rec.l_f = std::nan("");
      if (++bad_streak >= 10) {
        throw_numeric("training diverged: non-finite losses for 10 consecutive "
                      "iterations ending at iteration " + std::to_string(it));
      }
    }
    res.log.records.push_back(rec);
    if (progress) progress(rec, config.iters);

    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
        (it + 1) % config.checkpoint_every == 0) {
      save_checkpoint(config.checkpoint_dir /
                          ("down_" + std::to_string(it + 1) + ".ckpt"),
                      res.down, &res.down_adam);
      save_checkpoint(config.checkpoint_dir /
                          ("disc_" + std::to_string(it + 1) + ".ckpt"),
                      res.disc, &disc_adam);
    }
  }
  return res;
}

}  // namespace degradelab
