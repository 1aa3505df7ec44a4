#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "radar/decoder.hpp"
#include "radar/embed_init.hpp"
#include "radar/encoder.hpp"
#include "radar/instances.hpp"
#include "radar/params.hpp"

namespace radar {

/// How the distance matrix fed to the attention fusion is normalized.
enum class DistNorm { ZScore, MinMax, Raw };
/// Demand node feature: demand / capacity (default) or demand / total demand.
enum class DemandFeature { Capacity, TotalSum };

std::string_view to_string(DistNorm v);
DistNorm parse_dist_norm(std::string_view text);
std::string_view to_string(DemandFeature v);
DemandFeature parse_demand_feature(std::string_view text);

struct ModelConfig {
  ProblemKind kind = ProblemKind::Atsp;
  embed::InitScheme init;
  encoder::EncoderConfig enc;
  DistNorm dist_norm = DistNorm::ZScore;
  DemandFeature demand_feature = DemandFeature::Capacity;
  double info_loss_lambda = 0.0;
  int info_loss_layer = 0;  // 0: raw distance features, l >= 1: output of encoder layer l

  void validate() const;
};

/// Normalized copy of d according to `mode`.
linalg::Matrix normalize_distances(const linalg::Matrix& d, DistNorm mode);

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  struct Encoded {
    ad::Var embeddings;
    ad::Var features;                  // raw distance features (before projection)
    std::optional<ad::Var> info_loss;  // present when info_loss_lambda > 0
    encoder::EncodeOutput encoder;
  };

  Encoded encode(ad::Tape& tape, const RoutingInstance& inst, std::uint64_t feature_seed,
                 bool keep_attention = false) const;

  decoder::RolloutResult solve(ad::Tape& tape, const RoutingInstance& inst,
                               decoder::DecodeMode mode, int n_starts, std::uint64_t seed,
                               const decoder::ActionLists* forced = nullptr,
                               Encoded* encoded = nullptr) const;

  std::string config_text() const;
  std::string checkpoint_bytes() const;
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
  static Model from_checkpoint(const Checkpoint& ckpt);

  int init_slot_w() const { return init_w_; }
  int info_slot_w1() const { return info_w1_; }
  int info_slot_w2() const { return info_w2_; }

 private:
  ModelConfig cfg_;
  ParamSet params_;
  int init_w_ = -1;
  int init_b_ = -1;
  std::vector<encoder::LayerSlots> layers_;
  decoder::DecoderSlots dec_{};
  int info_w1_ = -1;
  int info_w2_ = -1;
};

/// Info loss: mean |X W1 (X W2)^T - D| for the bilinear read-out of X.
ad::Var info_loss(ad::Var x, const linalg::Matrix& d_normalized, ad::Var w1, ad::Var w2);

}  // namespace radar
