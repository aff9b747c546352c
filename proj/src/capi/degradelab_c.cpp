#include "degradelab/degradelab.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "degradelab/checkpoint.hpp"
#include "degradelab/config.hpp"
#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"
#include "degradelab/image.hpp"
#include "degradelab/kernel.hpp"
#include "degradelab/report.hpp"
#include "degradelab/trainer.hpp"

namespace dl = degradelab;

struct dl_image {
  dl::Image image;
};
struct dl_image_set {
  std::vector<dl::Image> images;
  std::vector<std::string> names;
};
struct dl_kernel {
  dl::Kernel2D kernel;
};
struct dl_config {
  dl::Config config;
  mutable std::string scratch;
};
struct dl_net {
  dl::Net<float> net;
  std::optional<dl::AdamState<float>> adam;
};
struct dl_func {
  dl::ImageFn fn;
};
struct dl_log {
  dl::TrainLog log;
};

namespace {

thread_local std::string g_last_error;

dl_status status_of(dl::ErrorKind kind) {
  switch (kind) {
    case dl::ErrorKind::InvalidArgument: return DL_ERR_INVALID;
    case dl::ErrorKind::Io: return DL_ERR_IO;
    case dl::ErrorKind::Config: return DL_ERR_CONFIG;
    case dl::ErrorKind::Numeric: return DL_ERR_NUMERIC;
    case dl::ErrorKind::Runtime: return DL_ERR_RUNTIME;
  }
  return DL_ERR_RUNTIME;
}

template <typename F>
dl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DL_OK;
  } catch (const dl::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DL_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DL_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return DL_ERR_RUNTIME;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) dl::throw_invalid(std::string(what) + " must not be NULL");
}

double nan_or(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

dl::ProgressFn wrap_progress(dl_progress_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const dl::TrainRecord& r, int total) {
    fn(r.iter, total, r.l_data, r.l_adv, r.l_f, nan_or(r.similarity), user);
  };
}

}  // namespace

extern "C" {

const char* dl_last_error(void) { return g_last_error.c_str(); }

const char* dl_version(void) { return "0.1.0"; }

const char* dl_status_name(dl_status status) {
  switch (status) {
    case DL_OK: return "ok";
    case DL_ERR_INVALID: return "invalid argument";
    case DL_ERR_IO: return "io error";
    case DL_ERR_CONFIG: return "config error";
    case DL_ERR_NUMERIC: return "numeric error";
    case DL_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

// ---- images

dl_status dl_image_create(int height, int width, int domain, dl_image** out) {
  return guarded([&] {
    require(out, "out");
    if (height <= 0 || width <= 0) dl::throw_invalid("image dimensions must be positive");
    if (domain != 0 && domain != 1) dl::throw_invalid("domain must be 0 or 1");
    *out = new dl_image{dl::Image(height, width,
                                  domain ? dl::ValueDomain::Unit : dl::ValueDomain::Byte)};
  });
}

dl_status dl_image_load_png(const char* path, dl_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dl_image{dl::load_png(path)};
  });
}

dl_status dl_image_save_png(const dl_image* image, const char* path) {
  return guarded([&] {
    require(image, "image");
    require(path, "path");
    dl::save_png(image->image, path);
  });
}

void dl_image_free(dl_image* image) { delete image; }

dl_status dl_image_shape(const dl_image* image, int* height, int* width,
                         int* domain) {
  return guarded([&] {
    require(image, "image");
    if (height) *height = image->image.height;
    if (width) *width = image->image.width;
    if (domain) *domain = image->image.domain == dl::ValueDomain::Unit ? 1 : 0;
  });
}

double* dl_image_data(dl_image* image) {
  return image ? image->image.data.data() : nullptr;
}

dl_status dl_image_normalize(const dl_image* byte_image, dl_image** out) {
  return guarded([&] {
    require(byte_image, "image");
    require(out, "out");
    *out = new dl_image{dl::normalize(byte_image->image)};
  });
}

dl_status dl_image_to_byte(const dl_image* image, dl_image** out) {
  return guarded([&] {
    require(image, "image");
    require(out, "out");
    *out = new dl_image{dl::to_byte(image->image)};
  });
}

dl_status dl_psnr(const dl_image* a, const dl_image* b, int border,
                  double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = dl::psnr_rgb(a->image, b->image, border);
  });
}

// ---- image sets

dl_status dl_image_set_create(dl_image_set** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dl_image_set{};
  });
}

dl_status dl_image_set_load_dir(const char* dir, int multiple,
                                dl_image_set** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    if (multiple < 1) dl::throw_invalid("crop multiple must be >= 1");
    auto set = std::make_unique<dl_image_set>();
    for (const auto& path : dl::list_png_files(dir)) {
      set->images.push_back(
          dl::crop_to_multiple(dl::normalize(dl::load_png(path)), multiple));
      set->names.push_back(path.stem().string());
    }
    if (set->images.empty()) dl::throw_io(std::string("no PNG files in ") + dir);
    *out = set.release();
  });
}

dl_status dl_image_set_push(dl_image_set* set, const dl_image* image,
                            const char* name) {
  return guarded([&] {
    require(set, "set");
    require(image, "image");
    set->images.push_back(image->image);
    set->names.push_back(name ? name : "img" + std::to_string(set->names.size()));
  });
}

size_t dl_image_set_size(const dl_image_set* set) {
  return set ? set->images.size() : 0;
}

dl_status dl_image_set_get(const dl_image_set* set, size_t index,
                           dl_image** out) {
  return guarded([&] {
    require(set, "set");
    require(out, "out");
    if (index >= set->images.size()) dl::throw_invalid("image index out of range");
    *out = new dl_image{set->images[index]};
  });
}

const char* dl_image_set_name(const dl_image_set* set, size_t index) {
  if (set == nullptr || index >= set->names.size()) return nullptr;
  return set->names[index].c_str();
}

void dl_image_set_free(dl_image_set* set) { delete set; }

dl_status dl_synthetic_data(const dl_kernel* kernel, int scale, int count,
                            int size, int holdout, uint64_t seed,
                            dl_image_set** hr, dl_image_set** lr,
                            dl_image_set** test_hr) {
  return guarded([&] {
    require(kernel, "kernel");
    require(hr, "hr");
    require(lr, "lr");
    require(test_hr, "test_hr");
    dl::SyntheticData data =
        dl::make_synthetic_data(kernel->kernel, scale, count, size, holdout, seed);
    auto wrap = [](std::vector<dl::Image>&& images, const std::string& prefix) {
      auto set = std::make_unique<dl_image_set>();
      for (std::size_t i = 0; i < images.size(); ++i) {
        set->names.push_back(prefix + std::to_string(i));
      }
      set->images = std::move(images);
      return set;
    };
    auto a = wrap(std::move(data.hr), "hr");
    auto b = wrap(std::move(data.lr), "lr");
    auto c = wrap(std::move(data.test_hr), "test");
    *hr = a.release();
    *lr = b.release();
    *test_hr = c.release();
  });
}

// ---- kernels

dl_status dl_kernel_benchmark(int index, dl_kernel** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dl_kernel{dl::benchmark_kernel(index)};
  });
}

dl_status dl_kernel_gaussian(double sigma_x, double sigma_y, double theta_deg,
                             int size, dl_kernel** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dl_kernel{dl::gaussian_kernel({sigma_x, sigma_y, theta_deg, size})};
  });
}

dl_status dl_kernel_from_taps(int size, const double* taps, dl_kernel** out) {
  return guarded([&] {
    require(taps, "taps");
    require(out, "out");
    if (size <= 0) dl::throw_invalid("kernel size must be positive");
    dl::Kernel2D k(size);
    std::copy(taps, taps + static_cast<std::size_t>(size) * size, k.taps().begin());
    *out = new dl_kernel{std::move(k)};
  });
}

dl_status dl_kernel_load(const char* path, dl_kernel** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dl_kernel{dl::load_kernel(path)};
  });
}

dl_status dl_kernel_save(const dl_kernel* kernel, const char* path) {
  return guarded([&] {
    require(kernel, "kernel");
    require(path, "path");
    dl::save_kernel(kernel->kernel, path);
  });
}

void dl_kernel_free(dl_kernel* kernel) { delete kernel; }

int dl_kernel_size(const dl_kernel* kernel) {
  return kernel ? kernel->kernel.size() : 0;
}

dl_status dl_kernel_taps(const dl_kernel* kernel, double* taps) {
  return guarded([&] {
    require(kernel, "kernel");
    require(taps, "taps");
    std::copy(kernel->kernel.taps().begin(), kernel->kernel.taps().end(), taps);
  });
}

dl_status dl_kernel_compose_x2(const dl_kernel* kernel, dl_kernel** out) {
  return guarded([&] {
    require(kernel, "kernel");
    require(out, "out");
    *out = new dl_kernel{dl::compose_x2(kernel->kernel)};
  });
}

dl_status dl_kernel_similarity(const dl_kernel* a, const dl_kernel* b,
                               double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = dl::kernel_similarity(a->kernel, b->kernel);
  });
}

// ---- degradation

dl_status dl_degrade(const dl_image* image, const dl_kernel* kernel, int scale,
                     dl_image** out) {
  return guarded([&] {
    require(image, "image");
    require(kernel, "kernel");
    require(out, "out");
    *out = new dl_image{dl::degrade(image->image, kernel->kernel, scale)};
  });
}

dl_status dl_synthesize_dataset(const char* hr_dir, const dl_kernel* kernel,
                                const char* kernel_id, int scale,
                                double split_ratio, uint64_t seed,
                                const char* out_dir) {
  return guarded([&] {
    require(hr_dir, "hr_dir");
    require(kernel, "kernel");
    require(out_dir, "out_dir");
    dl::synthesize_dataset(hr_dir, kernel->kernel, kernel_id ? kernel_id : "",
                           scale, split_ratio, seed, out_dir);
  });
}

// ---- configuration

dl_status dl_config_create(const char* preset, dl_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dl_config{dl::Config(preset ? preset : "desk"), {}};
  });
}

void dl_config_free(dl_config* config) { delete config; }

dl_status dl_config_load_file(dl_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->config.load_file(path);
  });
}

dl_status dl_config_set(dl_config* config, const char* assignment) {
  return guarded([&] {
    require(config, "config");
    require(assignment, "assignment");
    config->config.set_override(assignment);
  });
}

const char* dl_config_get(const dl_config* config, const char* key) {
  if (config == nullptr || key == nullptr) return nullptr;
  const dl_status st = guarded([&] { config->scratch = config->config.get(key); });
  return st == DL_OK ? config->scratch.c_str() : nullptr;
}

dl_status dl_config_write(const dl_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->config.write_resolved(path);
  });
}

dl_status dl_config_validate(const dl_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.train_config().validate();
    config->config.sr_config().validate();
  });
}

size_t dl_config_key_count(void) { return dl::config_keys().size(); }

dl_status dl_config_key_info(size_t index, const char** name,
                             const char** paper_default,
                             const char** desk_default, const char** help) {
  return guarded([&] {
    const auto& keys = dl::config_keys();
    if (index >= keys.size()) dl::throw_invalid("config key index out of range");
    const dl::ConfigKey& k = keys[index];
    if (name) *name = k.name.c_str();
    if (paper_default) *paper_default = k.paper_default.c_str();
    if (desk_default) *desk_default = k.desk_default.c_str();
    if (help) *help = k.help.c_str();
  });
}

// ---- networks and functions

dl_status dl_net_load(const char* path, dl_net** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    dl::Checkpoint ck = dl::load_checkpoint(path);
    *out = new dl_net{std::move(ck.net), std::move(ck.adam)};
  });
}

dl_status dl_net_save(const dl_net* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    dl::save_checkpoint(path, net->net, net->adam ? &*net->adam : nullptr);
  });
}

void dl_net_free(dl_net* net) { delete net; }

size_t dl_net_param_count(const dl_net* net) {
  return net ? net->net.param_count() : 0;
}

const char* dl_net_role(const dl_net* net) {
  return net ? dl::role_name(net->net.spec().role) : nullptr;
}

int dl_net_scale(const dl_net* net) { return net ? net->net.spec().scale : 0; }

dl_status dl_func_from_net(const dl_net* net, int times, dl_func** out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    if (times < 1) dl::throw_invalid("times must be >= 1");
    const dl::NetRole role = net->net.spec().role;
    if (role == dl::NetRole::Discriminator) {
      dl::throw_invalid("a discriminator is not an image map");
    }
    dl::ImageFn once = role == dl::NetRole::SR ? dl::sr_fn(net->net)
                                               : dl::downsampler_fn(net->net);
    dl::ImageFn fn = once;
    for (int i = 1; i < times; ++i) fn = dl::compose_fns(fn, once);
    *out = new dl_func{std::move(fn)};
  });
}

dl_status dl_func_from_kernel(const dl_kernel* kernel, int scale,
                              dl_func** out) {
  return guarded([&] {
    require(kernel, "kernel");
    require(out, "out");
    *out = new dl_func{dl::kernel_downsampler_fn(kernel->kernel, scale)};
  });
}

dl_status dl_func_bicubic(int scale, dl_func** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dl_func{dl::bicubic_upsampler(scale)};
  });
}

void dl_func_free(dl_func* fn) { delete fn; }

dl_status dl_func_apply(const dl_func* fn, const dl_image* image,
                        dl_image** out) {
  return guarded([&] {
    require(fn, "fn");
    require(image, "image");
    require(out, "out");
    const dl::Image& in = image->image;
    *out = new dl_image{fn->fn(in.domain == dl::ValueDomain::Byte ? dl::normalize(in) : in)};
  });
}

dl_status dl_retrieve_kernel(const dl_func* fn, const dl_image_set* hr,
                             int patch, int n_samples, int support, int scale,
                             uint64_t seed, size_t max_rows, dl_kernel** out) {
  return guarded([&] {
    require(fn, "fn");
    require(hr, "hr");
    require(out, "out");
    const dl::KernelFit fit = dl::retrieve_from_fn(
        fn->fn, hr->images, patch, n_samples, support, scale, seed, max_rows);
    *out = new dl_kernel{fit.kernel};
  });
}

// ---- training

dl_status dl_train_downsampler(const dl_config* config, const dl_image_set* hr,
                               const dl_image_set* lr,
                               const dl_kernel* gt_kernel,
                               const char* checkpoint_dir,
                               dl_progress_fn progress, void* user,
                               dl_net** net, dl_kernel** kernel, dl_log** log) {
  return guarded([&] {
    require(config, "config");
    require(hr, "hr");
    require(lr, "lr");
    require(net, "net");
    dl::TrainConfig tc = config->config.train_config();
    if (checkpoint_dir) tc.checkpoint_dir = checkpoint_dir;
    std::optional<dl::Kernel2D> gt;
    if (gt_kernel) gt = gt_kernel->kernel;
    dl::DownsamplerResult res = dl::train_downsampler(
        tc, hr->images, lr->images, gt, {}, wrap_progress(progress, user));
    auto n = std::make_unique<dl_net>(dl_net{std::move(res.down), std::move(res.down_adam)});
    std::unique_ptr<dl_kernel> k;
    if (kernel && res.kernel) k = std::make_unique<dl_kernel>(dl_kernel{*res.kernel});
    std::unique_ptr<dl_log> l;
    if (log) l = std::make_unique<dl_log>(dl_log{std::move(res.log)});
    *net = n.release();
    if (kernel) *kernel = k.release();
    if (log) *log = l.release();
  });
}

dl_status dl_train_sr(const dl_config* config, const dl_func* downsampler,
                      const dl_image_set* hr, dl_progress_fn progress,
                      void* user, dl_net** net, dl_log** log) {
  return guarded([&] {
    require(config, "config");
    require(downsampler, "downsampler");
    require(hr, "hr");
    require(net, "net");
    dl::SrResult res = dl::train_sr(config->config.sr_config(), downsampler->fn,
                                    hr->images, wrap_progress(progress, user));
    auto n = std::make_unique<dl_net>(dl_net{std::move(res.sr), std::nullopt});
    std::unique_ptr<dl_log> l;
    if (log) l = std::make_unique<dl_log>(dl_log{std::move(res.log)});
    *net = n.release();
    if (log) *log = l.release();
  });
}

dl_status dl_log_save_csv(const dl_log* log, const char* path) {
  return guarded([&] {
    require(log, "log");
    require(path, "path");
    log->log.write_csv(path);
  });
}

dl_status dl_log_load_csv(const char* path, dl_log** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dl_log{dl::TrainLog::read_csv(path)};
  });
}

size_t dl_log_size(const dl_log* log) { return log ? log->log.records.size() : 0; }

dl_status dl_log_record(const dl_log* log, size_t index, int* iter,
                        double* l_data, double* l_adv, double* l_f,
                        double* similarity) {
  return guarded([&] {
    require(log, "log");
    if (index >= log->log.records.size()) dl::throw_invalid("log index out of range");
    const dl::TrainRecord& r = log->log.records[index];
    if (iter) *iter = r.iter;
    if (l_data) *l_data = r.l_data;
    if (l_adv) *l_adv = r.l_adv;
    if (l_f) *l_f = r.l_f;
    if (similarity) *similarity = nan_or(r.similarity);
  });
}

void dl_log_free(dl_log* log) { delete log; }

// ---- evaluation and reports

dl_status dl_eval(const dl_func* down, const dl_func* sr,
                  const dl_image_set* test_hr, const dl_kernel* gt_kernel,
                  int scale, int border_hr, const char* csv_path,
                  dl_eval_mean* mean) {
  return guarded([&] {
    require(test_hr, "test_hr");
    require(gt_kernel, "gt_kernel");
    const dl::EvalReport rep = dl::eval_protocols(
        down ? &down->fn : nullptr, sr ? &sr->fn : nullptr, test_hr->images,
        test_hr->names, gt_kernel->kernel, scale, border_hr);
    if (csv_path) rep.write_csv(csv_path);
    if (mean) {
      mean->psnr_down = nan_or(rep.mean.psnr_down);
      mean->psnr_sr = nan_or(rep.mean.psnr_sr);
      mean->psnr_bicubic = rep.mean.psnr_bicubic;
    }
  });
}

dl_status dl_report(const char* const* log_paths, size_t count,
                    const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    if (count > 0) require(log_paths, "log_paths");
    std::vector<std::filesystem::path> logs;
    for (size_t i = 0; i < count; ++i) {
      require(log_paths[i], "log path");
      logs.emplace_back(log_paths[i]);
    }
    dl::render_report(logs, out_dir);
  });
}

}  // extern "C"
