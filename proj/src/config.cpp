#include "radar/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "radar/error.hpp"

namespace radar {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"kind", "atsp", "problem kind: atsp | acvrp", true},
      {"n", "10", "training instance size (nodes, depot included)", false},
      {"generator", "matnet", "matrix generator: matnet | noisy_euclidean", false},
      {"sigma", "0", "noise level of the noisy_euclidean generator", false},
      {"demand_kind", "uniform", "acvrp demands: uniform | skewed_small | skewed_large", false},
      {"init", "svd", "node init: svd | random | one_hot | knn | evd | mds | qr", true},
      {"rank_k", "10", "rank of svd/evd/mds/qr features", true},
      {"knn_k", "10", "neighbors of knn features", true},
      {"one_hot_width", "64", "width of one_hot features (max nodes)", true},
      {"model_dim", "64", "embedding width", true},
      {"n_heads", "8", "attention heads", true},
      {"n_layers", "3", "encoder layers", true},
      {"ffn_dim", "128", "feed-forward hidden width", true},
      {"fusion_hidden", "16", "hidden width of the score fusion map", true},
      {"attn_norm", "sinkhorn", "attention normalization: sinkhorn | softmax", true},
      {"sinkhorn_iters", "10", "Sinkhorn iterations", true},
      {"norm_kind", "instance", "residual normalization: instance | layer", true},
      {"dist_norm", "zscore", "distance normalization for attention: zscore | minmax | raw", true},
      {"demand_feature", "capacity", "acvrp demand feature: capacity | total_sum", true},
      {"info_loss_lambda", "0", "weight of the bilinear reconstruction loss", true},
      {"info_loss_layer", "0", "0 = raw features, l = output of encoder layer l", true},
      {"lr", "4e-4", "Adam learning rate", false},
      {"weight_decay", "1e-6", "L2 weight decay added to the gradient", false},
      {"epochs", "200", "training epochs", false},
      {"instances_per_epoch", "256", "instances per epoch", false},
      {"batch", "64", "instances per optimizer step", false},
      {"n_starts", "0", "trajectories per instance; 0 = one per node/customer", false},
      {"seed", "1", "master seed", false},
      {"checkpoint_every", "0", "extra checkpoint every k epochs (0 = off)", false},
      {"lr_decay", "0.1", "learning-rate factor for the final epochs", false},
      {"lr_decay_fraction", "0.05", "share of final epochs run at the decayed rate", false},
      {"log_wallclock", "false", "write elapsed seconds into metrics.tsv", false},
      {"train_corpus", "", "directory of fixed training instances (optional)", false},
      {"eval_corpus", "", "directory of evaluation instances (ablate)", false},
      {"eval_instances", "200", "generated evaluation instances when eval_corpus is unset", false},
      {"eval_seed", "424242", "seed of generated evaluation instances", false},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (cfg.has(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      cfg.set(key, trim(std::string_view(body).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  if (!find_key(key)) throw ConfigError("unknown key '" + std::string(key) + "'");
  values_[std::string(key)] = std::string(value);
}

std::string ExperimentConfig::get(std::string_view key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + std::string(key) + "'");
  return std::string(k->default_value);
}

int ExperimentConfig::get_int(std::string_view key) const {
  const std::string v = get(key);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || out < INT32_MIN ||
      out > INT32_MAX) {
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + v + "'");
  }
  return static_cast<int>(out);
}

std::uint64_t ExperimentConfig::get_u64(std::string_view key) const {
  const std::string v = get(key);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a nonnegative integer, got '" +
                      v + "'");
  }
  return out;
}

double ExperimentConfig::get_double(std::string_view key) const {
  const std::string v = get(key);
  try {
    return parse_double(v);
  } catch (const ParseError&) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + v + "'");
  }
}

bool ExperimentConfig::get_bool(std::string_view key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true/false, got '" + v + "'");
}

std::string ExperimentConfig::text() const {
  std::string out;
  for (const auto& k : config_keys()) {
    if (auto it = values_.find(k.name); it != values_.end()) {
      out += std::string(k.name) + " = " + it->second + "\n";
    }
  }
  return out;
}

ModelConfig to_model_config(const ExperimentConfig& cfg) {
  ModelConfig m;
  m.kind = parse_problem_kind(cfg.get("kind"));
  m.init.variant = embed::parse_init_variant(cfg.get("init"));
  m.init.rank_k = cfg.get_int("rank_k");
  m.init.knn_k = cfg.get_int("knn_k");
  m.init.one_hot_width = cfg.get_int("one_hot_width");
  m.enc.model_dim = cfg.get_int("model_dim");
  m.enc.n_heads = cfg.get_int("n_heads");
  m.enc.n_layers = cfg.get_int("n_layers");
  m.enc.ffn_dim = cfg.get_int("ffn_dim");
  m.enc.fusion_hidden = cfg.get_int("fusion_hidden");
  m.enc.attn_norm = encoder::parse_attn_norm(cfg.get("attn_norm"));
  m.enc.sinkhorn_iters = cfg.get_int("sinkhorn_iters");
  m.enc.norm_kind = encoder::parse_norm_kind(cfg.get("norm_kind"));
  m.dist_norm = parse_dist_norm(cfg.get("dist_norm"));
  m.demand_feature = parse_demand_feature(cfg.get("demand_feature"));
  m.info_loss_lambda = cfg.get_double("info_loss_lambda");
  m.info_loss_layer = cfg.get_int("info_loss_layer");
  m.validate();
  return m;
}

GeneratorSpec to_generator_spec(const ExperimentConfig& cfg) {
  GeneratorSpec g;
  g.kind = parse_problem_kind(cfg.get("kind"));
  g.n = cfg.get_int("n");
  g.generator = parse_matrix_generator(cfg.get("generator"));
  g.sigma = cfg.get_double("sigma");
  g.demand_kind = parse_demand_kind(cfg.get("demand_kind"));
  if (g.sigma < 0.0) throw ConfigError("sigma must be >= 0");
  return g;
}

train::TrainConfig to_train_config(const ExperimentConfig& cfg) {
  train::TrainConfig t;
  t.model = to_model_config(cfg);
  t.gen = to_generator_spec(cfg);
  t.lr = cfg.get_double("lr");
  t.weight_decay = cfg.get_double("weight_decay");
  t.epochs = cfg.get_int("epochs");
  t.instances_per_epoch = cfg.get_int("instances_per_epoch");
  t.batch = cfg.get_int("batch");
  t.n_starts = cfg.get_int("n_starts");
  t.seed = cfg.get_u64("seed");
  t.checkpoint_every = cfg.get_int("checkpoint_every");
  t.lr_decay = cfg.get_double("lr_decay");
  t.lr_decay_fraction = cfg.get_double("lr_decay_fraction");
  t.log_wallclock = cfg.get_bool("log_wallclock");
  t.train_corpus = cfg.get("train_corpus");
  t.validate();
  return t;
}

ExperimentConfig model_config_entries(const ModelConfig& m) {
  ExperimentConfig cfg;
  cfg.set("kind", to_string(m.kind));
  cfg.set("init", embed::to_string(m.init.variant));
  cfg.set("rank_k", std::to_string(m.init.rank_k));
  cfg.set("knn_k", std::to_string(m.init.knn_k));
  cfg.set("one_hot_width", std::to_string(m.init.one_hot_width));
  cfg.set("model_dim", std::to_string(m.enc.model_dim));
  cfg.set("n_heads", std::to_string(m.enc.n_heads));
  cfg.set("n_layers", std::to_string(m.enc.n_layers));
  cfg.set("ffn_dim", std::to_string(m.enc.ffn_dim));
  cfg.set("fusion_hidden", std::to_string(m.enc.fusion_hidden));
  cfg.set("attn_norm", encoder::to_string(m.enc.attn_norm));
  cfg.set("sinkhorn_iters", std::to_string(m.enc.sinkhorn_iters));
  cfg.set("norm_kind", encoder::to_string(m.enc.norm_kind));
  cfg.set("dist_norm", to_string(m.dist_norm));
  cfg.set("demand_feature", to_string(m.demand_feature));
  cfg.set("info_loss_lambda", format_double(m.info_loss_lambda));
  cfg.set("info_loss_layer", std::to_string(m.info_loss_layer));
  return cfg;
}

std::string describe_config_keys() {
  std::string out = "Config keys (key = value, '#' comments):\n";
  for (const auto& k : config_keys()) {
    out += "  " + std::string(k.name) + " [" + std::string(k.default_value) + "]  " +
           std::string(k.doc) + "\n";
  }
  return out;
}

}  // namespace radar
