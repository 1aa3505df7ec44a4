#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "radar/instances.hpp"
#include "radar/model.hpp"
#include "radar/params.hpp"

namespace radar::train {

/// mean_t((objective_t - mean(objective)) * log_prob_t). Objectives are
/// constants; only log-probabilities carry gradient.
ad::Var reinforce_loss(ad::Var log_probs, std::span<const double> objectives);

struct AdamState {
  std::vector<ad::Tensor> m, v;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Adam with bias correction; weight decay is added to the gradient
/// (g + wd * theta) before the moment updates.
void adam_step(ParamSet& params, std::span<const ad::Tensor> grads, AdamState& state, double lr,
               double weight_decay);

struct TrainConfig {
  ModelConfig model;
  GeneratorSpec gen;
  double lr = 4e-4;
  double weight_decay = 1e-6;
  int epochs = 200;
  int instances_per_epoch = 256;
  int batch = 64;
  int n_starts = 0;  // 0: one per node (ATSP) / customer (ACVRP)
  std::uint64_t seed = 1;
  int checkpoint_every = 0;
  double lr_decay = 0.1;
  double lr_decay_fraction = 0.05;  // final share of epochs run at lr * lr_decay
  bool log_wallclock = false;
  std::filesystem::path train_corpus;  // fixed instances instead of fresh ones

  void validate() const;
  double lr_at(int epoch) const;
};

struct EpochMetrics {
  int epoch = 0;
  double mean_objective = 0.0;  // best sampled trajectory per instance
  double mean_gap = std::numeric_limits<double>::quiet_NaN();
  double loss = 0.0;
  double lr = 0.0;
  double wallclock_s = 0.0;
};

std::string metrics_header();
std::string format_metrics(const EpochMetrics& m, bool with_wallclock);

/// Seed of training instance `index` in `epoch`.
std::uint64_t instance_seed(std::uint64_t seed, int epoch, int index);

struct StepStats {
  double loss = 0.0;
  double mean_best_objective = 0.0;
  std::vector<double> best_objectives;
};

/// One optimizer step on a fixed batch: sample rollouts, REINFORCE (+ info
/// loss), backward, Adam. `grads_out` receives the averaged gradient if given.
StepStats train_step(Model& model, std::span<const RoutingInstance> batch, int n_starts,
                     std::uint64_t seed, AdamState& adam, double lr, double weight_decay,
                     std::vector<ad::Tensor>* grads_out = nullptr);

struct TrainOutputs {
  std::filesystem::path dir;  // model.rdr / metrics.tsv go here when non-empty
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> metrics;
};

/// Full training run, deterministic in cfg.seed. Throws NumericalDivergence
/// on a non-finite loss or gradient.
TrainResult train_loop(const TrainConfig& cfg, const TrainOutputs& outputs = {});

}  // namespace radar::train
