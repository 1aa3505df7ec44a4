#include "radar/decoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "radar/error.hpp"
#include "radar/rng.hpp"

namespace radar::decoder {

using ad::Mask;
using ad::Tensor;
using ad::Var;

std::string_view to_string(DecodeMode m) { return m == DecodeMode::Greedy ? "greedy" : "sample"; }

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "greedy") return DecodeMode::Greedy;
  if (text == "sample") return DecodeMode::Sample;
  throw ConfigError("unknown decode mode '" + std::string(text) + "'");
}

DecoderSlots register_decoder(ParamSet& params, ProblemKind kind, int model_dim, Rng& rng) {
  const int ctx_width = kind == ProblemKind::Acvrp ? model_dim + 1 : 2 * model_dim;
  DecoderSlots s{};
  s.w_context = params.add_uniform("dec.w_context", ctx_width, model_dim, ctx_width, rng);
  s.glimpse_k = params.add_uniform("dec.glimpse_k", model_dim, model_dim, model_dim, rng);
  s.glimpse_v = params.add_uniform("dec.glimpse_v", model_dim, model_dim, model_dim, rng);
  s.glimpse_out = params.add_uniform("dec.glimpse_out", model_dim, model_dim, model_dim, rng);
  s.logit_k = params.add_uniform("dec.logit_k", model_dim, model_dim, model_dim, rng);
  return s;
}

DecoderContext prepare(const RoutingInstance& inst, Var embeddings, const DecoderSlots& slots,
                       const ParamSet& params, int n_heads) {
  if (embeddings.rows() != inst.n) throw WidthMismatch("decoder: embedding rows != n");
  if (embeddings.cols() % n_heads != 0) throw WidthMismatch("decoder: width % heads != 0");
  ad::Tape& t = *embeddings.tape();
  DecoderContext ctx;
  ctx.inst = &inst;
  ctx.embeddings = embeddings;
  ctx.glimpse_k = ad::matmul(embeddings, params.bind(t, slots.glimpse_k));
  ctx.glimpse_v = ad::matmul(embeddings, params.bind(t, slots.glimpse_v));
  ctx.logit_k = ad::matmul(embeddings, params.bind(t, slots.logit_k));
  ctx.graph_mean = ad::mean_rows(embeddings);
  ctx.n_heads = n_heads;
  return ctx;
}

Mask feasibility_mask(const RoutingInstance& inst, std::span<const DecoderState> states) {
  const int n = inst.n;
  Mask allowed = Mask::Constant(static_cast<Eigen::Index>(states.size()), n, false);
  for (std::size_t r = 0; r < states.size(); ++r) {
    const DecoderState& s = states[r];
    if (!inst.is_cvrp()) {
      for (int j = 0; j < n; ++j) allowed(r, j) = !s.visited[j];
      continue;
    }
    if (s.done) {
      allowed(r, inst.depot) = true;
      continue;
    }
    allowed(r, inst.depot) = s.current != inst.depot;
    for (int j = 0; j < n; ++j) {
      if (j == inst.depot || s.visited[j]) continue;
      allowed(r, j) = inst.demands[j] <= s.remaining_capacity + kCapacityTolerance;
    }
  }
  return allowed;
}

Var pointer_logits(const DecoderContext& ctx, std::span<const DecoderState> states,
                   const Mask& allowed, const DecoderSlots& slots, const ParamSet& params) {
  ad::Tape& t = *ctx.embeddings.tape();
  const RoutingInstance& inst = *ctx.inst;
  const auto rows = static_cast<Eigen::Index>(states.size());
  const Eigen::Index dim = ctx.embeddings.cols();

  std::vector<int> current(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) current[r] = states[r].current;
  const Var here = ad::gather_rows(ctx.embeddings, current);
  Var extra;
  if (inst.is_cvrp()) {
    Tensor cap(rows, 1);
    for (std::size_t r = 0; r < states.size(); ++r) cap(r, 0) = states[r].remaining_capacity;
    extra = t.constant(std::move(cap));
  } else {
    extra = ad::broadcast_rows(ctx.graph_mean, rows);
  }
  const Var parts[] = {here, extra};
  const Var query = ad::matmul(ad::concat_cols(parts), params.bind(t, slots.w_context));

  const Eigen::Index dh = dim / ctx.n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(ctx.n_heads));
  for (int h = 0; h < ctx.n_heads; ++h) {
    const Var scores = ad::scale(
        ad::matmul_nt(ad::slice_cols(query, h * dh, dh), ad::slice_cols(ctx.glimpse_k, h * dh, dh)),
        inv_sqrt_dh);
    const Var weights = ad::masked_softmax_rows(scores, allowed);
    heads.push_back(ad::matmul(weights, ad::slice_cols(ctx.glimpse_v, h * dh, dh)));
  }
  const Var joined = ctx.n_heads == 1 ? heads.front() : ad::concat_cols(heads);
  const Var glimpse = ad::matmul(joined, params.bind(t, slots.glimpse_out));
  const Var compat = ad::scale(ad::matmul_nt(glimpse, ctx.logit_k),
                               1.0 / std::sqrt(static_cast<double>(dim)));
  return ad::scale(ad::tanh(compat), kLogitClip);
}

std::vector<double> pointer_logits(const DecoderContext& ctx, const DecoderState& state,
                                   const DecoderSlots& slots, const ParamSet& params) {
  const DecoderState one[] = {state};
  const Mask allowed = feasibility_mask(*ctx.inst, one);
  if (!allowed.any()) throw AllMasked("no feasible next node");
  const Var logits = pointer_logits(ctx, one, allowed, slots, params);
  std::vector<double> out(static_cast<std::size_t>(ctx.inst->n));
  for (int j = 0; j < ctx.inst->n; ++j) {
    out[j] = allowed(0, j) ? logits.value()(0, j) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

int default_starts(const RoutingInstance& inst) {
  return inst.is_cvrp() ? std::max(1, inst.n - 1) : inst.n;
}

namespace {

int choose(const Tensor& log_probs, Eigen::Index row, const Mask& allowed, DecodeMode mode,
           Rng& rng) {
  const Eigen::Index n = log_probs.cols();
  int best = -1;
  if (mode == DecodeMode::Greedy) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (allowed(row, j) && (best < 0 || log_probs(row, j) > log_probs(row, best))) {
        best = static_cast<int>(j);
      }
    }
    return best;
  }
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!allowed(row, j)) continue;
    best = static_cast<int>(j);
    acc += std::exp(log_probs(row, j));
    if (u < acc) return best;
  }
  return best;  // rounding left u beyond the total mass
}

void apply(const RoutingInstance& inst, DecoderState& s, int node, std::vector<int>& sequence) {
  sequence.push_back(node);
  s.current = node;
  ++s.step;
  if (!inst.is_cvrp()) {
    s.visited[node] = true;
    s.done = s.step == inst.n - 1;
    return;
  }
  if (node == inst.depot) {
    s.remaining_capacity = 1.0;
    return;
  }
  s.visited[node] = true;
  s.remaining_capacity -= inst.demands[node];
  bool all = true;
  for (int j = 0; j < inst.n && all; ++j) all = j == inst.depot || s.visited[j];
  s.done = all;
}

}  // namespace

RolloutResult rollout(const DecoderContext& ctx, const DecoderSlots& slots, const ParamSet& params,
                      DecodeMode mode, int n_starts, std::uint64_t seed,
                      const ActionLists* forced) {
  const RoutingInstance& inst = *ctx.inst;
  const int n = inst.n;
  if (n_starts < 1) throw ConfigError("rollout: n_starts must be >= 1");
  if (forced && static_cast<int>(forced->size()) != n_starts) {
    throw ConfigError("rollout: forced action count != n_starts");
  }
  ad::Tape& tape = *ctx.embeddings.tape();

  std::vector<DecoderState> states(static_cast<std::size_t>(n_starts));
  std::vector<std::vector<int>> sequences(states.size());
  std::vector<Rng> rngs;
  rngs.reserve(states.size());
  RolloutResult result;
  result.actions.resize(states.size());

  for (int t = 0; t < n_starts; ++t) {
    DecoderState& s = states[t];
    s.visited.assign(static_cast<std::size_t>(n), false);
    rngs.emplace_back(split_seed(seed, static_cast<std::uint64_t>(t)));
    if (!inst.is_cvrp()) {
      s.start = s.current = t % n;
      s.visited[s.start] = true;
      sequences[t].push_back(s.start);
      s.done = n == 1;
    } else {
      s.current = inst.depot;
      s.visited[inst.depot] = true;
      sequences[t].push_back(inst.depot);
      s.start = n > 1 ? 1 + t % (n - 1) : inst.depot;
      if (n > 1) apply(inst, s, s.start, sequences[t]);
      else s.done = true;
    }
  }

  Var total = tape.constant(Tensor::Zero(n_starts, 1));
  std::vector<std::size_t> cursor(states.size(), 0);
  auto all_done = [&] {
    for (const auto& s : states) {
      if (!s.done) return false;
    }
    return true;
  };

  while (!all_done()) {
    const Mask allowed = feasibility_mask(inst, states);
    for (Eigen::Index r = 0; r < allowed.rows(); ++r) {
      if (!allowed.row(r).any()) throw AllMasked("trajectory " + std::to_string(r));
    }
    const Var logits = pointer_logits(ctx, states, allowed, slots, params);
    const Var log_probs = ad::masked_log_softmax_rows(logits, allowed);

    std::vector<int> rows(states.size());
    std::vector<int> picks(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
      rows[t] = static_cast<int>(t);
      DecoderState& s = states[t];
      if (s.done) {
        picks[t] = inst.depot;  // sole allowed entry, log-probability 0
        continue;
      }
      int node;
      if (forced) {
        const auto& list = (*forced)[t];
        if (cursor[t] >= list.size()) throw ConfigError("rollout: forced actions exhausted");
        node = list[cursor[t]++];
        if (!allowed(static_cast<Eigen::Index>(t), node)) {
          throw InvalidSolution("rollout: forced action " + std::to_string(node) + " is masked");
        }
      } else {
        node = choose(log_probs.value(), static_cast<Eigen::Index>(t), allowed, mode, rngs[t]);
      }
      picks[t] = node;
      result.actions[t].push_back(node);
      apply(inst, s, node, sequences[t]);
    }
    total = ad::add(total, ad::pick(log_probs, rows, picks));
  }

  for (int t = 0; t < n_starts; ++t) {
    Solution sol;
    sol.kind = inst.kind;
    sol.sequence = std::move(sequences[t]);
    if (inst.is_cvrp()) sol.sequence.push_back(inst.depot);
    sol.objective = objective(inst, sol);
    states[t].log_prob = total.value()(t, 0);
    result.solutions.push_back(std::move(sol));
  }
  result.log_probs = total;
  return result;
}

std::size_t best_index(std::span<const Solution> solutions) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < solutions.size(); ++i) {
    if (solutions[i].objective < solutions[best].objective) best = i;
  }
  return best;
}

}  // namespace radar::decoder
