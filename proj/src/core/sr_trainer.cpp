#include <cmath>
#include <memory>
#include <random>

#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"
#include "degradelab/trainer.hpp"

namespace degradelab {

namespace {

Image quantize_unit(const Image& unit) { return normalize(to_byte(unit)); }

Image as_unit(const Image& im) {
  return im.domain == ValueDomain::Byte ? normalize(im) : im;
}

}  // namespace

SrResult train_sr(const SrConfig& config, const ImageFn& downsampler,
                  std::span<const Image> hr_set, const ProgressFn& progress) {
  config.validate();
  if (hr_set.empty()) throw_invalid("train_sr needs a non-empty HR set");
  const int s = config.scale;
  const int hr_patch = config.lr_patch * s;

  std::vector<Image> hr_pool;
  std::vector<Image> lr_pool;
  for (const Image& raw : hr_set) {
    Image hr = crop_to_multiple(as_unit(raw), s);
    if (hr.height < hr_patch || hr.width < hr_patch) continue;
    Image lr = downsampler(hr);
    if (lr.height != hr.height / s || lr.width != hr.width / s) {
      throw_invalid("downsampler output does not match the SR scale");
    }
    if (config.quantize) lr = quantize_unit(lr);
    hr_pool.push_back(std::move(hr));
    lr_pool.push_back(std::move(lr));
  }
  if (hr_pool.empty()) {
    throw_invalid("no HR image is large enough for the SR patch size");
  }

  SrResult res{build_sr<float>(config.width, config.blocks, s), {}};
  std::mt19937_64 rng(config.seed);
  init_params(res.sr, rng());
  AdamState<float> adam;
  AdamConfig step_cfg = config.adam;

  std::uniform_int_distribution<std::size_t> pick(0, hr_pool.size() - 1);
  std::vector<Image> lr_batch(config.batch);
  std::vector<Image> hr_batch(config.batch);
  for (int it = 0; it < config.iters; ++it) {
    step_cfg.lr = config.adam.lr * std::pow(0.5, it / config.halve_every);
    for (int b = 0; b < config.batch; ++b) {
      const std::size_t idx = pick(rng);
      const Image& lr = lr_pool[idx];
      std::uniform_int_distribution<int> ty(0, lr.height - config.lr_patch);
      std::uniform_int_distribution<int> tx(0, lr.width - config.lr_patch);
      const int top = ty(rng);
      const int left = tx(rng);
      lr_batch[b] = lr.crop(top, left, config.lr_patch, config.lr_patch);
      hr_batch[b] = hr_pool[idx].crop(top * s, left * s, hr_patch, hr_patch);
    }
    const Tensor<float> x = images_to_tensor<float>(lr_batch);
    const Tensor<float> y = images_to_tensor<float>(hr_batch);
    const Tensor<float> out = res.sr.forward(x);

    Tensor<float> grad(out.n, out.c, out.h, out.w);
    const double count = static_cast<double>(out.size());
    double loss = 0.0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      const double d = static_cast<double>(out.data[k]) - y.data[k];
      loss += std::abs(d);
      grad.data[k] = static_cast<float>(((d > 0.0) - (d < 0.0)) / count);
    }
    loss /= count;
    if (!std::isfinite(loss)) {
      throw_numeric("SR training diverged at iteration " + std::to_string(it));
    }
    res.sr.zero_grad();
    res.sr.backward(grad, true);
    adam_step(res.sr.params(), step_cfg, adam);

    TrainRecord rec;
    rec.iter = it;
    rec.l_data = loss;
    res.log.records.push_back(rec);
    if (progress) progress(rec, config.iters);
  }
  return res;
}

ImageFn sr_fn(const Net<float>& net) {
  auto copy = std::make_shared<Net<float>>(net);
  return [copy](const Image& lr) { return apply_net(*copy, lr); };
}

ImageFn bicubic_upsampler(int scale) {
  return [scale](const Image& lr) { return upsample_bicubic(as_unit(lr), scale); };
}

}  // namespace degradelab
