#include "radar/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "radar/error.hpp"
#include "radar/experiments.hpp"
#include "radar/oracle.hpp"
#include "radar/parallel.hpp"
#include "radar/rng.hpp"

namespace radar::train {

using ad::Tape;
using ad::Tensor;
using ad::Var;

Var reinforce_loss(Var log_probs, std::span<const double> objectives) {
  const auto count = static_cast<Eigen::Index>(objectives.size());
  if (log_probs.rows() != count || log_probs.cols() != 1) {
    throw WidthMismatch("reinforce_loss: log_probs must be n_starts x 1");
  }
  double baseline = 0.0;
  for (double o : objectives) baseline += o;
  baseline /= static_cast<double>(count);
  Tensor weights(count, 1);
  for (Eigen::Index t = 0; t < count; ++t) {
    weights(t, 0) = (objectives[t] - baseline) / static_cast<double>(count);
  }
  return ad::dot_const(log_probs, weights);
}

void adam_step(ParamSet& params, std::span<const Tensor> grads, AdamState& state, double lr,
               double weight_decay) {
  if (grads.size() != params.size()) throw WidthMismatch("adam_step: gradient count");
  if (state.m.empty()) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t s = 0; s < params.size(); ++s) {
    Tensor& theta = params.value(static_cast<int>(s));
    Tensor g = grads[s].size() == 0 ? Tensor::Zero(theta.rows(), theta.cols()) : grads[s];
    if (g.rows() != theta.rows() || g.cols() != theta.cols()) {
      throw WidthMismatch("adam_step: gradient shape for '" + params.name(static_cast<int>(s)) + "'");
    }
    if (weight_decay != 0.0) g += weight_decay * theta;
    state.m[s] = kAdamBeta1 * state.m[s] + (1.0 - kAdamBeta1) * g;
    state.v[s] = kAdamBeta2 * state.v[s] + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    theta.array() -= lr * (state.m[s].array() / c1) /
                     ((state.v[s].array() / c2).sqrt() + kAdamEps);
  }
}

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (instances_per_epoch < 1) throw ConfigError("instances_per_epoch must be >= 1");
  if (n_starts < 0) throw ConfigError("n_starts must be >= 0");
  if (gen.kind != model.kind) throw ConfigError("generator kind differs from model kind");
  if (gen.n < 2) throw ConfigError("n must be >= 2");
}

double TrainConfig::lr_at(int epoch) const {
  const int decayed = static_cast<int>(std::floor(lr_decay_fraction * epochs));
  return epoch >= epochs - decayed ? lr * lr_decay : lr;
}

std::string metrics_header() { return "epoch\tmean_obj\tmean_gap\tloss\tlr\twallclock_s\n"; }

std::string format_metrics(const EpochMetrics& m, bool with_wallclock) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6e\t%.3e\t", m.epoch, m.mean_objective,
                m.mean_gap, m.loss, m.lr);
  std::string line = buf;
  if (with_wallclock) {
    std::snprintf(buf, sizeof buf, "%.2f", m.wallclock_s);
    line += buf;
  } else {
    line += "-";
  }
  return line + "\n";
}

std::uint64_t instance_seed(std::uint64_t seed, int epoch, int index) {
  return split_seed(split_seed(seed, 0x7a11 + static_cast<std::uint64_t>(epoch)),
                    static_cast<std::uint64_t>(index));
}

StepStats train_step(Model& model, std::span<const RoutingInstance> batch, int n_starts,
                     std::uint64_t seed, AdamState& adam, double lr, double weight_decay,
                     std::vector<Tensor>* grads_out) {
  const std::size_t count = batch.size();
  const double inv_batch = 1.0 / static_cast<double>(count);
  const double lambda = model.config().info_loss_lambda;
  std::vector<std::vector<Tensor>> per_instance(count);
  std::vector<double> losses(count, 0.0);
  StepStats stats;
  stats.best_objectives.resize(count);

  parallel_for(count, worker_threads(), [&](std::size_t i) {
    const RoutingInstance& inst = batch[i];
    Tape tape;
    Model::Encoded enc;
    const int starts = n_starts > 0 ? n_starts : decoder::default_starts(inst);
    decoder::RolloutResult result;
    try {
      result = model.solve(tape, inst, decoder::DecodeMode::Sample, starts, split_seed(seed, i),
                           nullptr, &enc);
    } catch (const NumericalUnderflow& e) {
      throw NumericalDivergence(e.what());
    }
    std::vector<double> objectives;
    objectives.reserve(result.solutions.size());
    for (const auto& s : result.solutions) objectives.push_back(s.objective);
    Var loss = reinforce_loss(result.log_probs, objectives);
    if (enc.info_loss) loss = ad::add(loss, ad::scale(*enc.info_loss, lambda));
    losses[i] = loss.scalar();
    tape.backward(loss);
    per_instance[i].resize(model.params().size());
    tape.accumulate_param_grads(per_instance[i], inv_batch);
    stats.best_objectives[i] = result.solutions[decoder::best_index(result.solutions)].objective;
  });

  std::vector<Tensor> grads = model.params().zeros_like();
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t s = 0; s < grads.size(); ++s) {
      if (per_instance[i][s].size() != 0) grads[s] += per_instance[i][s];
    }
    stats.loss += losses[i] * inv_batch;
    stats.mean_best_objective += stats.best_objectives[i] * inv_batch;
  }
  if (!std::isfinite(stats.loss)) throw NumericalDivergence("non-finite loss");
  for (const auto& g : grads) {
    if (!g.allFinite()) throw NumericalDivergence("non-finite gradient");
  }
  adam_step(model.params(), grads, adam, lr, weight_decay);
  if (grads_out) *grads_out = std::move(grads);
  return stats;
}

namespace {

bool exact_gap_available(const GeneratorSpec& gen) {
  return gen.n <= 12;
}

}  // namespace

TrainResult train_loop(const TrainConfig& cfg, const TrainOutputs& outputs) {
  cfg.validate();
  TrainResult result{Model(cfg.model, split_seed(cfg.seed, 1)), {}};
  Model& model = result.model;
  AdamState adam;

  std::vector<RoutingInstance> corpus;
  if (!cfg.train_corpus.empty()) {
    corpus = read_corpus(cfg.train_corpus);
    if (corpus.empty()) throw IoError("training corpus is empty");
  }

  std::ofstream metrics_file;
  if (!outputs.dir.empty()) {
    metrics_file.open(outputs.dir / "metrics.tsv", std::ios::binary);
    if (!metrics_file) throw IoError("cannot write metrics.tsv in " + outputs.dir.string());
    metrics_file << metrics_header();
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<RoutingInstance> instances;
    instances.reserve(static_cast<std::size_t>(cfg.instances_per_epoch));
    for (int i = 0; i < cfg.instances_per_epoch; ++i) {
      if (corpus.empty()) {
        instances.push_back(generate_instance(cfg.gen, instance_seed(cfg.seed, epoch, i)));
      } else {
        const std::size_t at =
            (static_cast<std::size_t>(epoch) * cfg.instances_per_epoch + i) % corpus.size();
        instances.push_back(corpus[at]);
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = cfg.lr_at(epoch);
    std::vector<double> best;
    best.reserve(instances.size());
    int batches = 0;
    for (std::size_t start = 0; start < instances.size(); start += cfg.batch) {
      const std::size_t len = std::min<std::size_t>(cfg.batch, instances.size() - start);
      const std::span<const RoutingInstance> batch(instances.data() + start, len);
      StepStats stats;
      try {
        stats = train_step(model, batch, cfg.n_starts,
                           split_seed(split_seed(cfg.seed, 0x5a3b + static_cast<std::uint64_t>(epoch)), start), adam, m.lr,
                           cfg.weight_decay);
      } catch (const NumericalDivergence& e) {
        throw NumericalDivergence("epoch " + std::to_string(epoch) + " batch " +
                                  std::to_string(batches) + ": " + e.what());
      }
      m.loss += stats.loss;
      best.insert(best.end(), stats.best_objectives.begin(), stats.best_objectives.end());
      ++batches;
    }
    m.loss /= static_cast<double>(std::max(batches, 1));
    double gap_sum = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) {
      m.mean_objective += best[i] / static_cast<double>(best.size());
      if (exact_gap_available(cfg.gen)) {
        const double ref = oracle::best_reference(instances[i]).objective;
        gap_sum += (best[i] - ref) / ref;
      }
    }
    if (exact_gap_available(cfg.gen)) m.mean_gap = gap_sum / static_cast<double>(best.size());
    m.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    result.metrics.push_back(m);
    if (metrics_file.is_open()) {
      metrics_file << format_metrics(m, cfg.log_wallclock);
      metrics_file.flush();
    }
    if (outputs.on_epoch) outputs.on_epoch(m);
    if (!outputs.dir.empty() && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      model.save(outputs.dir / ("model_e" + std::to_string(epoch + 1) + ".rdr"));
    }
  }
  if (!outputs.dir.empty()) model.save(outputs.dir / "model.rdr");
  return result;
}

}  // namespace radar::train
