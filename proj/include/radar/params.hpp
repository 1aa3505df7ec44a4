#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "radar/rng.hpp"
#include "radar/tape.hpp"

namespace radar {

// Named, ordered parameter tensors. The registration order is the checkpoint
// order, so it must not depend on anything but the model configuration.
class ParamSet {
 public:
  int add(std::string name, ad::Tensor init);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  int add_uniform(std::string name, Eigen::Index rows, Eigen::Index cols, double fan_in, Rng& rng);
  int add_constant(std::string name, Eigen::Index rows, Eigen::Index cols, double value);

  int index(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t size() const { return values_.size(); }

  const std::string& name(int slot) const { return names_[slot]; }
  ad::Tensor& value(int slot) { return values_[slot]; }
  const ad::Tensor& value(int slot) const { return values_[slot]; }

  ad::Var bind(ad::Tape& tape, int slot) const { return tape.param(slot, values_[slot]); }

  std::vector<ad::Tensor> zeros_like() const;
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<ad::Tensor> values_;
};

// Checkpoint layout (all integers little-endian uint32):
//   "RDR1" | config_len | config text | count |
//   count x { name_len | name | rank=2 | rows | cols | rows*cols float32 LE, row-major }
std::string serialize_checkpoint(const ParamSet& params, std::string_view config_text);

struct Checkpoint {
  std::string config_text;
  std::vector<std::string> names;
  std::vector<ad::Tensor> values;
};

Checkpoint parse_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params,
                      std::string_view config_text);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into `params`; names, order, and shapes must match.
void load_into(const Checkpoint& ckpt, ParamSet& params);

}  // namespace radar
