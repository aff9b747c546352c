// Command-line front end over the C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "degradelab/degradelab.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Failure : std::runtime_error {
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

void check(dl_status st, const std::string& context) {
  if (st == DL_OK) return;
  const int code = (st == DL_ERR_CONFIG) ? kExitConfig : kExitRuntime;
  throw Failure(code, context + ": " + dl_last_error());
}

[[noreturn]] void config_error(const std::string& what) { throw Failure(kExitConfig, what); }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ImagePtr = std::unique_ptr<dl_image, Deleter<dl_image, dl_image_free>>;
using SetPtr = std::unique_ptr<dl_image_set, Deleter<dl_image_set, dl_image_set_free>>;
using KernelPtr = std::unique_ptr<dl_kernel, Deleter<dl_kernel, dl_kernel_free>>;
using ConfigPtr = std::unique_ptr<dl_config, Deleter<dl_config, dl_config_free>>;
using NetPtr = std::unique_ptr<dl_net, Deleter<dl_net, dl_net_free>>;
using FuncPtr = std::unique_ptr<dl_func, Deleter<dl_func, dl_func_free>>;
using LogPtr = std::unique_ptr<dl_log, Deleter<dl_log, dl_log_free>>;

// Options shared by every subcommand that reads configuration.
struct CommonOpts {
  std::string config_file;
  std::string preset = "desk";
  std::vector<std::string> overrides;
  std::optional<long long> seed;
  bool quiet = false;
};

std::string key_listing() {
  std::string out = "Config keys (paper / desk defaults):\n";
  for (size_t i = 0; i < dl_config_key_count(); ++i) {
    const char *name, *paper, *desk, *help;
    dl_config_key_info(i, &name, &paper, &desk, &help);
    out += "  " + std::string(name) + " = " + paper + " / " + desk + "\n      " + help + "\n";
  }
  return out;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--set", o.overrides, "override a key, e.g. --set train.iters=100");
  cmd->add_option("--seed", o.seed, "sets train.seed and sr.seed");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
  cmd->footer(key_listing());
}

ConfigPtr resolve_config(const CommonOpts& o) {
  dl_config* raw = nullptr;
  check(dl_config_create(o.preset.c_str(), &raw), "config");
  ConfigPtr cfg(raw);
  if (!o.config_file.empty()) check(dl_config_load_file(cfg.get(), o.config_file.c_str()), "config");
  for (const auto& s : o.overrides) check(dl_config_set(cfg.get(), s.c_str()), "config");
  if (o.seed) {
    const std::string v = std::to_string(*o.seed);
    check(dl_config_set(cfg.get(), ("train.seed=" + v).c_str()), "config");
    check(dl_config_set(cfg.get(), ("sr.seed=" + v).c_str()), "config");
  }
  check(dl_config_validate(cfg.get()), "config");
  return cfg;
}

int get_int(const dl_config* cfg, const char* key) {
  const char* v = dl_config_get(cfg, key);
  if (!v) config_error(std::string("missing key ") + key);
  return std::stoi(v);
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Failure(kExitRuntime, "cannot create " + p.string() + ": " + ec.message());
}

void write_config(const dl_config* cfg, const fs::path& dir) {
  check(dl_config_write(cfg, (dir / "config.txt").c_str()), "config.txt");
}

KernelPtr load_kernel(const std::string& path) {
  dl_kernel* k = nullptr;
  check(dl_kernel_load(path.c_str(), &k), path);
  return KernelPtr(k);
}

SetPtr load_set(const std::string& dir, int multiple) {
  dl_image_set* s = nullptr;
  check(dl_image_set_load_dir(dir.c_str(), multiple, &s), dir);
  return SetPtr(s);
}

void save_set(const dl_image_set* set, const fs::path& dir) {
  make_dir(dir);
  for (size_t i = 0; i < dl_image_set_size(set); ++i) {
    dl_image *img = nullptr, *bytes = nullptr;
    check(dl_image_set_get(set, i, &img), "image set");
    ImagePtr own(img);
    check(dl_image_to_byte(img, &bytes), "image set");
    ImagePtr own_b(bytes);
    const fs::path p = dir / (std::string(dl_image_set_name(set, i)) + ".png");
    check(dl_image_save_png(bytes, p.c_str()), p.string());
  }
}

struct Synthetic {
  SetPtr hr, lr, test;
};

Synthetic synthetic_sets(const dl_config* cfg, const dl_kernel* gt, long long data_seed) {
  dl_image_set *hr = nullptr, *lr = nullptr, *test = nullptr;
  check(dl_synthetic_data(gt, get_int(cfg, "train.scale"), get_int(cfg, "train.textures"),
                          get_int(cfg, "train.texture_size"), get_int(cfg, "eval.holdout"),
                          static_cast<uint64_t>(data_seed), &hr, &lr, &test),
        "synthetic data");
  return {SetPtr(hr), SetPtr(lr), SetPtr(test)};
}

void print_progress(int iter, int total, double l_data, double l_adv, double l_f,
                    double similarity, void*) {
  const int every = std::max(1, total / 20);
  if ((iter + 1) % every != 0 && iter + 1 != total) return;
  std::fprintf(stderr, "[%d/%d] l_data=%.5f l_adv=%.4f l_f=%.4f", iter + 1, total, l_data,
               l_adv, l_f);
  if (!std::isnan(similarity)) std::fprintf(stderr, " similarity=%.4f", similarity);
  std::fprintf(stderr, "\n");
}

// ---- subcommands

struct MakeKernelsOpts {
  std::string out;
};

int run_make_kernels(const MakeKernelsOpts& o) {
  make_dir(o.out);
  for (int i = 0; i <= 4; ++i) {
    dl_kernel *k = nullptr, *k4 = nullptr;
    check(dl_kernel_benchmark(i, &k), "kernel");
    KernelPtr own(k);
    check(dl_kernel_compose_x2(k, &k4), "compose");
    KernelPtr own4(k4);
    const fs::path base = fs::path(o.out) / ("k" + std::to_string(i));
    check(dl_kernel_save(k, (base.string() + "_x2.txt").c_str()), "save");
    check(dl_kernel_save(k4, (base.string() + "_x4.txt").c_str()), "save");
  }
  std::cout << "wrote k0..k4 (x2 and x4) to " << o.out << "\n";
  return 0;
}

struct DegradeOpts {
  std::string hr, kernel, out;
  int scale = 2;
  double split = 0.5;
  long long seed = 0;
};

int run_degrade(const DegradeOpts& o) {
  KernelPtr k = load_kernel(o.kernel);
  make_dir(o.out);
  check(dl_synthesize_dataset(o.hr.c_str(), k.get(), fs::path(o.kernel).stem().c_str(), o.scale,
                              o.split, static_cast<uint64_t>(o.seed), o.out.c_str()),
        "degrade");
  std::cout << "wrote " << (fs::path(o.out) / "manifest.tsv").string() << "\n";
  return 0;
}

struct TrainDownOpts {
  CommonOpts common;
  std::string hr, lr, gt_kernel, out = "run";
  long long data_seed = 0;
};

int run_train_down(const TrainDownOpts& o) {
  ConfigPtr cfg = resolve_config(o.common);
  KernelPtr gt;
  if (!o.gt_kernel.empty()) gt = load_kernel(o.gt_kernel);
  const int multiple = 2 * get_int(cfg.get(), "train.scale");
  SetPtr hr, lr;
  make_dir(o.out);
  if (o.hr.empty() != o.lr.empty()) config_error("--hr and --lr must be given together");
  if (!o.hr.empty()) {
    hr = load_set(o.hr, multiple);
    lr = load_set(o.lr, 1);
  } else {
    if (!gt) config_error("synthetic training data needs --gt-kernel (or pass --hr/--lr)");
    Synthetic s = synthetic_sets(cfg.get(), gt.get(), o.data_seed);
    save_set(s.hr.get(), fs::path(o.out) / "data" / "hr");
    save_set(s.lr.get(), fs::path(o.out) / "data" / "lr");
    save_set(s.test.get(), fs::path(o.out) / "data" / "test");
    hr = std::move(s.hr);
    lr = std::move(s.lr);
  }
  write_config(cfg.get(), o.out);
  const fs::path ckpt_dir = fs::path(o.out) / "checkpoints";
  if (get_int(cfg.get(), "train.checkpoint_every") > 0) make_dir(ckpt_dir);

  dl_net* net = nullptr;
  dl_kernel* kernel = nullptr;
  dl_log* log = nullptr;
  check(dl_train_downsampler(cfg.get(), hr.get(), lr.get(), gt.get(), ckpt_dir.c_str(),
                             o.common.quiet ? nullptr : print_progress, nullptr, &net, &kernel,
                             &log),
        "train-down");
  NetPtr own_net(net);
  KernelPtr own_kernel(kernel);
  LogPtr own_log(log);
  check(dl_net_save(net, (fs::path(o.out) / "down.ckpt").c_str()), "save");
  check(dl_log_save_csv(log, (fs::path(o.out) / "log.csv").c_str()), "save");
  if (kernel) check(dl_kernel_save(kernel, (fs::path(o.out) / "kernel.txt").c_str()), "save");
  if (kernel && gt) {
    double sim = 0.0;
    check(dl_kernel_similarity(kernel, gt.get(), &sim), "similarity");
    std::cout << "similarity " << sim << "\n";
  }
  std::cout << "wrote " << (fs::path(o.out) / "down.ckpt").string() << "\n";
  return 0;
}

struct RetrieveOpts {
  CommonOpts common;
  std::string net, kernel, hr, gt_kernel, out = "kernel.txt";
  int scale = 2;
  std::optional<int> support, samples;
  long long data_seed = 0;
};

FuncPtr downsampler_func(const std::string& net_path, const std::string& kernel_path, int scale) {
  dl_func* fn = nullptr;
  if (!net_path.empty() == !kernel_path.empty()) {
    config_error("give exactly one of --net / --kernel");
  }
  if (!net_path.empty()) {
    dl_net* net = nullptr;
    check(dl_net_load(net_path.c_str(), &net), net_path);
    NetPtr own(net);
    const int s = dl_net_scale(net);
    if (s <= 0 || scale % s != 0) config_error("scale must be a power of the network scale");
    int times = 0;
    for (int v = scale; v > 1; v /= s) ++times;
    check(dl_func_from_net(net, std::max(1, times), &fn), "net");
  } else {
    KernelPtr k = load_kernel(kernel_path);
    check(dl_func_from_kernel(k.get(), scale, &fn), "kernel");
  }
  return FuncPtr(fn);
}

int run_retrieve(const RetrieveOpts& o) {
  ConfigPtr cfg = resolve_config(o.common);
  FuncPtr fn = downsampler_func(o.net, o.kernel, o.scale);
  KernelPtr gt;
  if (!o.gt_kernel.empty()) gt = load_kernel(o.gt_kernel);
  SetPtr hr;
  if (!o.hr.empty()) {
    hr = load_set(o.hr, o.scale);
  } else {
    if (!gt) config_error("--hr is required unless --gt-kernel selects synthetic data");
    hr = std::move(synthetic_sets(cfg.get(), gt.get(), o.data_seed).hr);
  }
  const int support = o.support ? *o.support : get_int(cfg.get(), "kernel.support");
  const int samples = o.samples ? *o.samples : get_int(cfg.get(), "kernel.samples");
  const int patch = get_int(cfg.get(), "train.hr_patch");
  dl_kernel* k = nullptr;
  check(dl_retrieve_kernel(fn.get(), hr.get(), patch, samples, support, o.scale,
                           static_cast<uint64_t>(get_int(cfg.get(), "train.seed")),
                           static_cast<size_t>(get_int(cfg.get(), "kernel.max_rows")), &k),
        "retrieve-kernel");
  KernelPtr own(k);
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  check(dl_kernel_save(k, o.out.c_str()), o.out);
  write_config(cfg.get(), out.has_parent_path() ? out.parent_path() : fs::path("."));
  if (gt) {
    double sim = 0.0;
    check(dl_kernel_similarity(k, gt.get(), &sim), "similarity");
    std::cout << "similarity " << sim << "\n";
  }
  std::cout << "wrote " << o.out << "\n";
  return 0;
}

struct TrainSrOpts {
  CommonOpts common;
  std::string down, kernel, hr, gt_kernel, out = "sr_run";
  long long data_seed = 0;
};

int run_train_sr(const TrainSrOpts& o) {
  ConfigPtr cfg = resolve_config(o.common);
  const int scale = get_int(cfg.get(), "sr.scale");
  FuncPtr fn = downsampler_func(o.down, o.kernel, scale);
  SetPtr hr;
  if (!o.hr.empty()) {
    hr = load_set(o.hr, scale);
  } else {
    if (o.gt_kernel.empty()) config_error("--hr is required unless --gt-kernel selects synthetic data");
    KernelPtr gt = load_kernel(o.gt_kernel);
    hr = std::move(synthetic_sets(cfg.get(), gt.get(), o.data_seed).hr);
  }
  make_dir(o.out);
  write_config(cfg.get(), o.out);
  dl_net* net = nullptr;
  dl_log* log = nullptr;
  check(dl_train_sr(cfg.get(), fn.get(), hr.get(), o.common.quiet ? nullptr : print_progress,
                    nullptr, &net, &log),
        "train-sr");
  NetPtr own(net);
  LogPtr own_log(log);
  check(dl_net_save(net, (fs::path(o.out) / "sr.ckpt").c_str()), "save");
  check(dl_log_save_csv(log, (fs::path(o.out) / "log.csv").c_str()), "save");
  std::cout << "wrote " << (fs::path(o.out) / "sr.ckpt").string() << "\n";
  return 0;
}

struct EvalOpts {
  CommonOpts common;
  std::string down, down_kernel, sr, test, gt_kernel, out = "eval.csv";
  int scale = 2;
  long long data_seed = 0;
};

int run_eval(const EvalOpts& o) {
  ConfigPtr cfg = resolve_config(o.common);
  if (o.gt_kernel.empty()) config_error("--gt-kernel is required");
  KernelPtr gt = load_kernel(o.gt_kernel);
  FuncPtr down, sr;
  if (!o.down.empty() || !o.down_kernel.empty()) down = downsampler_func(o.down, o.down_kernel, o.scale);
  if (!o.sr.empty()) {
    dl_net* net = nullptr;
    check(dl_net_load(o.sr.c_str(), &net), o.sr);
    NetPtr own(net);
    dl_func* fn = nullptr;
    check(dl_func_from_net(net, 1, &fn), "sr");
    sr.reset(fn);
  }
  SetPtr test;
  if (!o.test.empty()) {
    test = load_set(o.test, o.scale);
  } else {
    test = std::move(synthetic_sets(cfg.get(), gt.get(), o.data_seed).test);
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  dl_eval_mean mean{};
  check(dl_eval(down.get(), sr.get(), test.get(), gt.get(), o.scale,
                get_int(cfg.get(), "eval.border"), o.out.c_str(), &mean),
        "eval");
  write_config(cfg.get(), out.has_parent_path() ? out.parent_path() : fs::path("."));
  if (!std::isnan(mean.psnr_down)) std::cout << "psnr_down " << mean.psnr_down << "\n";
  if (!std::isnan(mean.psnr_sr)) std::cout << "psnr_sr " << mean.psnr_sr << "\n";
  std::cout << "psnr_bicubic " << mean.psnr_bicubic << "\n";
  return 0;
}

struct ReportOpts {
  std::vector<std::string> logs;
  std::string out = "report";
};

int run_report(const ReportOpts& o) {
  std::vector<const char*> paths;
  for (const auto& l : o.logs) paths.push_back(l.c_str());
  make_dir(o.out);
  check(dl_report(paths.data(), paths.size(), o.out.c_str()), "report");
  std::cout << "wrote " << (fs::path(o.out) / "summary.md").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned downsampling, kernel retrieval and SR training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dl_version());

  MakeKernelsOpts mk;
  auto* c_mk = app.add_subcommand("make-kernels", "write the benchmark kernels at x2 and x4");
  c_mk->add_option("--out", mk.out, "output directory")->required();

  DegradeOpts dg;
  auto* c_dg = app.add_subcommand("degrade", "split an HR folder and synthesize its LR half");
  c_dg->add_option("--hr", dg.hr, "HR PNG folder")->required()->check(CLI::ExistingDirectory);
  c_dg->add_option("--kernel", dg.kernel, "kernel file")->required()->check(CLI::ExistingFile);
  c_dg->add_option("--scale", dg.scale, "decimation factor");
  c_dg->add_option("--split", dg.split, "fraction of images kept as HR");
  c_dg->add_option("--seed", dg.seed, "shuffle seed");
  c_dg->add_option("--out", dg.out, "output directory")->required();

  TrainDownOpts td;
  auto* c_td = app.add_subcommand("train-down", "train the x2 downsampler");
  add_common(c_td, td.common);
  c_td->add_option("--hr", td.hr, "HR PNG folder")->check(CLI::ExistingDirectory);
  c_td->add_option("--lr", td.lr, "LR PNG folder")->check(CLI::ExistingDirectory);
  c_td->add_option("--gt-kernel", td.gt_kernel, "reference kernel; alone, selects synthetic data")
      ->check(CLI::ExistingFile);
  c_td->add_option("--data-seed", td.data_seed, "seed of the synthetic textures");
  c_td->add_option("--out", td.out, "output directory");

  RetrieveOpts rk;
  auto* c_rk = app.add_subcommand("retrieve-kernel", "least-squares kernel of a downsampler");
  add_common(c_rk, rk.common);
  c_rk->add_option("--net", rk.net, "downsampler checkpoint")->check(CLI::ExistingFile);
  c_rk->add_option("--kernel", rk.kernel, "kernel file used as the black box")->check(CLI::ExistingFile);
  c_rk->add_option("--hr", rk.hr, "HR PNG folder")->check(CLI::ExistingDirectory);
  c_rk->add_option("--gt-kernel", rk.gt_kernel, "reference kernel for similarity")->check(CLI::ExistingFile);
  c_rk->add_option("--support", rk.support, "kernel support p");
  c_rk->add_option("--samples", rk.samples, "number of HR patches N");
  c_rk->add_option("--scale", rk.scale, "2, or 4 to compose a x2 net");
  c_rk->add_option("--data-seed", rk.data_seed, "seed of the synthetic textures");
  c_rk->add_option("--out", rk.out, "kernel file to write");

  TrainSrOpts ts;
  auto* c_ts = app.add_subcommand("train-sr", "train the SR network on generated pairs");
  add_common(c_ts, ts.common);
  c_ts->add_option("--down", ts.down, "downsampler checkpoint")->check(CLI::ExistingFile);
  c_ts->add_option("--kernel", ts.kernel, "kernel file used as the downsampler")->check(CLI::ExistingFile);
  c_ts->add_option("--hr", ts.hr, "HR PNG folder")->check(CLI::ExistingDirectory);
  c_ts->add_option("--gt-kernel", ts.gt_kernel, "selects synthetic training textures")->check(CLI::ExistingFile);
  c_ts->add_option("--data-seed", ts.data_seed, "seed of the synthetic textures");
  c_ts->add_option("--out", ts.out, "output directory");

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "PSNR of Down vs GT LR and SR vs HR");
  add_common(c_ev, ev.common);
  c_ev->add_option("--down", ev.down, "downsampler checkpoint")->check(CLI::ExistingFile);
  c_ev->add_option("--down-kernel", ev.down_kernel, "kernel used as the downsampler")->check(CLI::ExistingFile);
  c_ev->add_option("--sr", ev.sr, "SR checkpoint")->check(CLI::ExistingFile);
  c_ev->add_option("--test", ev.test, "test HR folder (default: synthetic holdout)")
      ->check(CLI::ExistingDirectory);
  c_ev->add_option("--gt-kernel", ev.gt_kernel, "ground-truth kernel")->check(CLI::ExistingFile);
  c_ev->add_option("--scale", ev.scale, "scale factor");
  c_ev->add_option("--data-seed", ev.data_seed, "seed of the synthetic textures");
  c_ev->add_option("--out", ev.out, "CSV to write");

  ReportOpts rp;
  auto* c_rp = app.add_subcommand("report", "curves and summary tables from log CSVs");
  c_rp->add_option("logs", rp.logs, "log.csv files")->required()->check(CLI::ExistingFile);
  c_rp->add_option("--out", rp.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_mk) return run_make_kernels(mk);
    if (*c_dg) return run_degrade(dg);
    if (*c_td) return run_train_down(td);
    if (*c_rk) return run_retrieve(rk);
    if (*c_ts) return run_train_sr(ts);
    if (*c_ev) return run_eval(ev);
    if (*c_rp) return run_report(rp);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
