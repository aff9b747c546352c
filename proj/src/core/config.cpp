#include "degradelab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include "degradelab/error.hpp"

namespace degradelab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

constexpr int kEpoch = kPaperEpochIterations;

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"kernel.samples", "50", "8", "HR patches N used per kernel retrieval"},
      {"kernel.support", "20", "8", "retrieved kernel support p"},
      {"kernel.max_rows", "200000", "200000",
       "row cap of the least-squares system (subsampled beyond)"},
      {"lfl.kind", "box", "box", "low-pass filter of the LFL: box or gaussian"},
      {"lfl.m", "16", "16", "box filter size on the LR side"},
      {"lfl.sigma", "2.0", "2.0", "gaussian filter width on the LR side"},
      {"train.data_term", "adl", "adl", "lfl, adl, bicubic or avgpool"},
      {"train.alpha", "100", "100", "weight of ADL and fixed data terms"},
      {"train.alpha_lfl", "200", "200", "weight of the LFL data term"},
      {"train.eta", "5e-5", "2e-4", "Adam learning rate for D and F"},
      {"train.beta1", "0.9", "0.9", "Adam beta1"},
      {"train.beta2", "0.999", "0.999", "Adam beta2"},
      {"train.adam_eps", "1e-8", "1e-8", "Adam epsilon"},
      {"train.epoch_iters", std::to_string(kEpoch), "100",
       "iterations per epoch (bookkeeping only)"},
      {"train.t_warmup", std::to_string(10 * kEpoch), "400",
       "LFL warm-up iterations before the first retrieval"},
      {"train.t_update", std::to_string(10 * kEpoch), "400",
       "iterations between kernel retrievals"},
      {"train.iters", std::to_string(80 * kEpoch), "2000",
       "total downsampler iterations T"},
      {"train.batch", "32", "2", "batch size"},
      {"train.hr_patch", "128", "128", "HR patch size (LR patch is half)"},
      {"train.scale", "2", "2", "downsampling factor of one model"},
      {"train.seed", "0", "0", "training seed"},
      {"train.down_width", "64", "16", "downsampler channel width n"},
      {"train.down_blocks", "4", "1", "residual blocks per downsampler stage"},
      {"train.disc_width", "64", "16", "discriminator base width"},
      {"train.checkpoint_every", "0", "0",
       "checkpoint interval in iterations (0 = final only)"},
      {"train.textures", "16", "16",
       "synthetic HR textures when no HR directory is given"},
      {"train.texture_size", "128", "128", "synthetic texture side"},
      {"sr.width", "32", "32", "SR network width"},
      {"sr.blocks", "4", "4", "SR residual blocks"},
      {"sr.scale", "2", "2",
       "SR factor (4 composes the x2 downsampler twice)"},
      {"sr.eta", "1e-4", "2e-3", "SR Adam learning rate"},
      {"sr.iters", "200000", "1500", "SR training iterations"},
      {"sr.batch", "16", "16", "SR batch size"},
      {"sr.lr_patch", "48", "24", "LR input patch size"},
      {"sr.halve_every", "50000", "50000",
       "iterations between SR learning-rate halvings"},
      {"sr.seed", "0", "0", "SR training seed"},
      {"sr.quantize", "true", "true", "round generated LR images to 8 bits"},
      {"eval.border", "-1", "-1",
       "HR border crop in pixels (-1 = kernel half-support)"},
      {"eval.holdout", "8", "8", "held-out synthetic test images"},
  };
  return keys;
}

Config::Config(const std::string& preset) : preset_(preset) {
  if (preset != "desk" && preset != "paper") {
    throw_config("unknown preset '" + preset + "' (expected desk or paper)");
  }
  for (const auto& k : config_keys()) {
    values_[k.name] = preset == "desk" ? k.desk_default : k.paper_default;
  }
  origins_.push_back("preset " + preset);
}

void Config::set(const std::string& key, const std::string& value,
                 const std::string& origin) {
  auto it = values_.find(key);
  if (it == values_.end()) throw_config("unknown config key '" + key + "'");
  it->second = value;
  origins_.push_back(origin + ": " + key);
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw_config("expected key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
      "override");
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw_config(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!values_.count(key)) {
      throw_config(where + ": unknown config key '" + key + "'");
    }
    set(key, trim(line.substr(eq + 1)), path.string());
  }
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw_config("unknown config key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos == v.size() && x >= INT32_MIN && x <= INT32_MAX) {
      return static_cast<int>(x);
    }
  } catch (const std::exception&) {
  }
  throw_config("config key '" + key + "' expects an integer, got '" + v + "'");
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw_config("config key '" + key + "' expects a number, got '" + v + "'");
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw_config("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::string Config::resolved_text() const {
  std::ostringstream os;
  for (const auto& o : origins_) os << "# " << o << '\n';
  for (const auto& k : config_keys()) {
    os << k.name << " = " << values_.at(k.name) << '\n';
  }
  return os.str();
}

void Config::write_resolved(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot write " + path.string());
  out << resolved_text();
}

LpfSpec Config::lfl_spec() const {
  LpfSpec spec;
  const std::string& kind = get("lfl.kind");
  if (kind == "box") {
    spec.kind = LpfKind::Box;
  } else if (kind == "gaussian") {
    spec.kind = LpfKind::Gaussian;
  } else {
    throw_config("lfl.kind must be box or gaussian, got '" + kind + "'");
  }
  spec.m = get_int("lfl.m");
  spec.sigma = get_double("lfl.sigma");
  if (spec.m <= 0) throw_config("lfl.m must be positive");
  if (!(spec.sigma > 0.0)) throw_config("lfl.sigma must be positive");
  return spec;
}

TrainConfig Config::train_config() const {
  TrainConfig c;
  c.data_term = parse_data_term(get("train.data_term"));
  c.alpha = get_double("train.alpha");
  c.alpha_lfl = get_double("train.alpha_lfl");
  c.lfl = lfl_spec();
  c.adam = {get_double("train.eta"), get_double("train.beta1"),
            get_double("train.beta2"), get_double("train.adam_eps")};
  c.t_warmup = get_int("train.t_warmup");
  c.t_update = get_int("train.t_update");
  c.iters = get_int("train.iters");
  c.batch = get_int("train.batch");
  c.hr_patch = get_int("train.hr_patch");
  c.scale = get_int("train.scale");
  c.seed = static_cast<std::uint64_t>(get_int("train.seed"));
  c.n_lsq_samples = get_int("kernel.samples");
  c.kernel_support = get_int("kernel.support");
  const int rows = get_int("kernel.max_rows");
  if (rows <= 0) throw_config("kernel.max_rows must be positive");
  c.max_lsq_rows = static_cast<std::size_t>(rows);
  c.down_width = get_int("train.down_width");
  c.down_blocks = get_int("train.down_blocks");
  c.disc_width = get_int("train.disc_width");
  c.checkpoint_every = get_int("train.checkpoint_every");
  c.validate();
  return c;
}

SrConfig Config::sr_config() const {
  SrConfig c;
  c.width = get_int("sr.width");
  c.blocks = get_int("sr.blocks");
  c.scale = get_int("sr.scale");
  c.adam = {get_double("sr.eta"), get_double("train.beta1"),
            get_double("train.beta2"), get_double("train.adam_eps")};
  c.iters = get_int("sr.iters");
  c.batch = get_int("sr.batch");
  c.lr_patch = get_int("sr.lr_patch");
  c.halve_every = get_int("sr.halve_every");
  c.seed = static_cast<std::uint64_t>(get_int("sr.seed"));
  c.quantize = get_bool("sr.quantize");
  c.validate();
  return c;
}

}  // namespace degradelab
