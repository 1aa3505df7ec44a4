#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "radar/model.hpp"
#include "radar/train.hpp"

namespace radar {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view doc;
  bool model_key;  // stored inside checkpoints
};

/// Every accepted key, in canonical order.
const std::vector<ConfigKey>& config_keys();

// Flat `key = value` configuration. `#` starts a comment; unknown keys and
// repeated keys are rejected.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  bool has(std::string_view key) const { return values_.count(std::string(key)) != 0; }
  /// Explicit value, or the documented default.
  std::string get(std::string_view key) const;

  int get_int(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  /// Explicitly set keys in canonical order, one `key = value` per line.
  std::string text() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

ModelConfig to_model_config(const ExperimentConfig& cfg);
train::TrainConfig to_train_config(const ExperimentConfig& cfg);
GeneratorSpec to_generator_spec(const ExperimentConfig& cfg);

/// All model keys with the values of `model`.
ExperimentConfig model_config_entries(const ModelConfig& model);

/// Human-readable key listing for --help output.
std::string describe_config_keys();

}  // namespace radar
