#include "radar/model.hpp"

#include <string>

#include "radar/config.hpp"
#include "radar/error.hpp"
#include "radar/rng.hpp"

namespace radar {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string_view to_string(DistNorm v) {
  switch (v) {
    case DistNorm::ZScore: return "zscore";
    case DistNorm::MinMax: return "minmax";
    case DistNorm::Raw: return "raw";
  }
  return "zscore";
}

DistNorm parse_dist_norm(std::string_view text) {
  if (text == "zscore") return DistNorm::ZScore;
  if (text == "minmax") return DistNorm::MinMax;
  if (text == "raw") return DistNorm::Raw;
  throw ConfigError("unknown distance normalization '" + std::string(text) + "'");
}

std::string_view to_string(DemandFeature v) {
  return v == DemandFeature::Capacity ? "capacity" : "total_sum";
}

DemandFeature parse_demand_feature(std::string_view text) {
  if (text == "capacity") return DemandFeature::Capacity;
  if (text == "total_sum") return DemandFeature::TotalSum;
  throw ConfigError("unknown demand feature '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  enc.validate();
  if (init.rank_k < 1) throw ConfigError("rank_k must be >= 1");
  if (init.knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (init.one_hot_width < 1) throw ConfigError("one_hot_width must be >= 1");
  if (info_loss_lambda < 0.0) throw ConfigError("info_loss_lambda must be >= 0");
  if (info_loss_layer < 0 || info_loss_layer > enc.n_layers) {
    throw ConfigError("info_loss_layer must be in [0, n_layers]");
  }
}

linalg::Matrix normalize_distances(const linalg::Matrix& d, DistNorm mode) {
  if (d.rows() < 2) return linalg::Matrix::Zero(d.rows(), d.cols());
  switch (mode) {
    case DistNorm::ZScore: return linalg::zscore_normalize(d).values;
    case DistNorm::MinMax: return linalg::minmax_normalize(d);
    case DistNorm::Raw: return d;
  }
  return d;
}

Var info_loss(Var x, const linalg::Matrix& d_normalized, Var w1, Var w2) {
  if (w1.rows() != x.cols() || w2.rows() != x.cols() || w1.cols() != w2.cols()) {
    throw WidthMismatch("info_loss: selector shapes do not match the embedding width");
  }
  Tape& t = *x.tape();
  const Var recon = ad::matmul_nt(ad::matmul(x, w1), ad::matmul(x, w2));
  if (recon.rows() != d_normalized.rows() || recon.cols() != d_normalized.cols()) {
    throw WidthMismatch("info_loss: reconstruction / target shape mismatch");
  }
  return ad::mean_abs(ad::sub(recon, t.constant(d_normalized)));
}

Model::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(split_seed(init_seed, 0));
  const int dim = cfg_.enc.model_dim;
  const int in_width = embed::feature_width(cfg_.init) + (cfg_.kind == ProblemKind::Acvrp ? 1 : 0);
  init_w_ = params_.add_uniform("init.w", in_width, dim, in_width, rng);
  init_b_ = params_.add_uniform("init.b", 1, dim, in_width, rng);
  layers_ = encoder::register_encoder(params_, cfg_.enc, rng);
  dec_ = decoder::register_decoder(params_, cfg_.kind, dim, rng);

  if (cfg_.info_loss_lambda > 0.0) {
    // Separate stream: enabling the loss leaves every other tensor unchanged.
    Rng info_rng(split_seed(init_seed, 1));
    const int k = cfg_.init.rank_k;
    const int width = cfg_.info_loss_layer == 0 ? embed::feature_width(cfg_.init) : dim;
    if (cfg_.info_loss_layer == 0 && width == 2 * k) {
      Tensor w1 = Tensor::Zero(width, k);
      Tensor w2 = Tensor::Zero(width, k);
      w1.topRows(k).setIdentity();
      w2.bottomRows(k).setIdentity();
      info_w1_ = params_.add("info.w1", std::move(w1));
      info_w2_ = params_.add("info.w2", std::move(w2));
    } else {
      info_w1_ = params_.add_uniform("info.w1", width, k, width, info_rng);
      info_w2_ = params_.add_uniform("info.w2", width, k, width, info_rng);
    }
  }
}

Model::Encoded Model::encode(Tape& tape, const RoutingInstance& inst, std::uint64_t feature_seed,
                             bool keep_attention) const {
  if (inst.kind != cfg_.kind) throw ConfigError("instance kind does not match the model");
  Encoded out;
  out.features = tape.constant(embed::distance_features(cfg_.init, inst.dist, feature_seed));

  std::optional<Var> node_features;
  if (inst.is_cvrp()) {
    Tensor q(inst.n, 1);
    double total = 0.0;
    for (double v : inst.demands) total += v;
    for (int i = 0; i < inst.n; ++i) {
      q(i, 0) = cfg_.demand_feature == DemandFeature::TotalSum && total > 0.0
                    ? inst.demands[i] / total
                    : inst.demands[i];
    }
    node_features = tape.constant(std::move(q));
  }
  const Var x0 = embed::project_features(out.features, node_features, params_.bind(tape, init_w_),
                                         params_.bind(tape, init_b_));
  const linalg::Matrix d = normalize_distances(inst.dist, cfg_.dist_norm);
  out.encoder = encoder::encode(x0, d, layers_, cfg_.enc, params_, keep_attention);
  out.embeddings = out.encoder.final;

  if (cfg_.info_loss_lambda > 0.0) {
    const Var x = cfg_.info_loss_layer == 0 ? out.features
                                            : out.encoder.layers[cfg_.info_loss_layer - 1];
    const linalg::Matrix target = normalize_distances(inst.dist, DistNorm::ZScore);
    out.info_loss = info_loss(x, target, params_.bind(tape, info_w1_), params_.bind(tape, info_w2_));
  }
  return out;
}

decoder::RolloutResult Model::solve(Tape& tape, const RoutingInstance& inst,
                                    decoder::DecodeMode mode, int n_starts, std::uint64_t seed,
                                    const decoder::ActionLists* forced, Encoded* encoded) const {
  Encoded enc = encode(tape, inst, split_seed(seed, 0x5eed));
  const decoder::DecoderContext ctx =
      decoder::prepare(inst, enc.embeddings, dec_, params_, cfg_.enc.n_heads);
  auto result = decoder::rollout(ctx, dec_, params_, mode, n_starts, seed, forced);
  if (encoded) *encoded = std::move(enc);
  return result;
}

std::string Model::config_text() const { return model_config_entries(cfg_).text(); }

std::string Model::checkpoint_bytes() const { return serialize_checkpoint(params_, config_text()); }

void Model::save(const std::filesystem::path& path) const {
  write_checkpoint(path, params_, config_text());
}

Model Model::from_checkpoint(const Checkpoint& ckpt) {
  const ExperimentConfig cfg = ExperimentConfig::parse(ckpt.config_text);
  Model model(to_model_config(cfg), 0);
  load_into(ckpt, model.params_);
  return model;
}

Model Model::load(const std::filesystem::path& path) {
  return from_checkpoint(read_checkpoint(path));
}

}  // namespace radar
