#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "degradelab/trainer.hpp"

namespace degradelab {

struct ConfigKey {
  std::string name;
  std::string paper_default;
  std::string desk_default;
  std::string help;
};

/// Every accepted key, in display order.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value configuration. Keys outside config_keys() are rejected.
class Config {
 public:
  /// Preset is "desk" or "paper".
  explicit Config(const std::string& preset = "desk");

  const std::string& preset() const { return preset_; }

  /// Reads `key = value` lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  /// Parses a single "key=value" override.
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value,
           const std::string& origin = "override");

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Fully resolved key = value text, with the preset and override origins
  /// recorded as comments.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& path) const;

  TrainConfig train_config() const;
  SrConfig sr_config() const;
  LpfSpec lfl_spec() const;

 private:
  std::string preset_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> origins_;
};

}  // namespace degradelab
