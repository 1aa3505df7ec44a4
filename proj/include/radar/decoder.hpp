#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "radar/instances.hpp"
#include "radar/params.hpp"
#include "radar/solution.hpp"
#include "radar/tape.hpp"

namespace radar::decoder {

enum class DecodeMode { Greedy, Sample };

std::string_view to_string(DecodeMode m);
DecodeMode parse_decode_mode(std::string_view text);

/// Compatibility logits are squashed to [-kLogitClip, kLogitClip].
inline constexpr double kLogitClip = 10.0;

struct DecoderSlots {
  int w_context, glimpse_k, glimpse_v, glimpse_out, logit_k;
};

/// Registers "dec.*" parameters. The context width is model_dim + 1 for
/// ACVRP (remaining capacity) and 2 * model_dim for ATSP (graph mean).
DecoderSlots register_decoder(ParamSet& params, ProblemKind kind, int model_dim, Rng& rng);

struct DecoderState {
  std::vector<bool> visited;
  int start = 0;
  int current = 0;
  double remaining_capacity = 1.0;
  int step = 0;
  double log_prob = 0.0;
  bool done = false;
};

// Per-instance projections of the encoder output, computed once per rollout.
struct DecoderContext {
  const RoutingInstance* inst = nullptr;
  ad::Var embeddings;
  ad::Var glimpse_k, glimpse_v, logit_k;
  ad::Var graph_mean;
  int n_heads = 1;
};

DecoderContext prepare(const RoutingInstance& inst, ad::Var embeddings, const DecoderSlots& slots,
                       const ParamSet& params, int n_heads);

/// Allowed next nodes, one row per trajectory. ATSP: unvisited nodes.
/// ACVRP: unvisited customers that fit the remaining capacity, plus the depot
/// unless the vehicle is already there; finished trajectories may only idle
/// at the depot.
ad::Mask feasibility_mask(const RoutingInstance& inst, std::span<const DecoderState> states);

/// Clipped compatibility logits (rows x n) before masking; the glimpse
/// attends only over allowed nodes.
ad::Var pointer_logits(const DecoderContext& ctx, std::span<const DecoderState> states,
                       const ad::Mask& allowed, const DecoderSlots& slots, const ParamSet& params);

/// Single-state convenience: clipped logits with disallowed entries at -inf.
/// Throws AllMasked if nothing is allowed.
std::vector<double> pointer_logits(const DecoderContext& ctx, const DecoderState& state,
                                   const DecoderSlots& slots, const ParamSet& params);

/// Actions chosen after the forced start, one list per trajectory.
using ActionLists = std::vector<std::vector<int>>;

struct RolloutResult {
  std::vector<Solution> solutions;
  ad::Var log_probs;  // n_starts x 1, forced first steps excluded
  ActionLists actions;
};

/// n for ATSP, n - 1 (one per customer) for ACVRP.
int default_starts(const RoutingInstance& inst);

/// Trajectory t is forced to start at node t mod n (ATSP) or customer
/// 1 + t mod (n - 1) (ACVRP), then follows `mode`. With `forced`, the recorded
/// actions are replayed instead, which re-scores a fixed set of trajectories.
RolloutResult rollout(const DecoderContext& ctx, const DecoderSlots& slots, const ParamSet& params,
                      DecodeMode mode, int n_starts, std::uint64_t seed,
                      const ActionLists* forced = nullptr);

/// Index of the cheapest solution (first on ties).
std::size_t best_index(std::span<const Solution> solutions);

}  // namespace radar::decoder
