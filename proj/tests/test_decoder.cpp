#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "radar/decoder.hpp"
#include "radar/error.hpp"
#include "radar/oracle.hpp"
#include "radar/solution.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::decoder;

namespace {

struct Fixture {
  RoutingInstance inst;
  ParamSet params;
  DecoderSlots slots{};
  ad::Tape tape;
  DecoderContext ctx;

  Fixture(ProblemKind kind, int n, std::uint64_t seed, int dim = 8, int heads = 2) {
    GeneratorSpec spec;
    spec.kind = kind;
    spec.n = n;
    inst = generate_instance(spec, seed);
    Rng rng(seed);
    slots = register_decoder(params, kind, dim, rng);
    const ad::Var emb = tape.constant(testing::random_tensor(n, dim, seed + 1));
    ctx = prepare(inst, emb, slots, params, heads);
  }
};

RoutingInstance tight_cvrp() {
  RoutingInstance inst;
  inst.kind = ProblemKind::Acvrp;
  inst.n = 5;
  inst.capacity = 10;
  inst.dist = gen_matnet_matrix(5, 3);
  inst.demands = {0, 0.6, 0.5, 0.4, 0.7};
  return inst;
}

}  // namespace

TEST_CASE("objective and solution rules") {
  RoutingInstance a;
  a.kind = ProblemKind::Atsp;
  a.n = 3;
  a.dist.resize(3, 3);
  a.dist << 0, 1, 5, 4, 0, 2, 3, 6, 0;
  CHECK(objective(a, {ProblemKind::Atsp, {0, 1, 2}, 0}) == 6.0);
  CHECK(objective(a, {ProblemKind::Atsp, {1, 2, 0}, 0}) == 6.0);
  CHECK(objective(a, {ProblemKind::Atsp, {0, 2, 1}, 0}) == 15.0);
  CHECK_THROWS_AS(objective(a, {ProblemKind::Atsp, {0, 1}, 0}), InvalidSolution);
  CHECK_THROWS_AS(objective(a, {ProblemKind::Atsp, {0, 1, 1}, 0}), InvalidSolution);
  CHECK_THROWS_AS(objective(a, {ProblemKind::Atsp, {0, 1, 3}, 0}), InvalidSolution);

  const auto c = tight_cvrp();
  CHECK_NOTHROW(objective(c, {ProblemKind::Acvrp, {0, 1, 3, 0, 2, 0, 4, 0}, 0}));
  CHECK_NOTHROW(objective(c, {ProblemKind::Acvrp, {0, 1, 0, 0, 2, 3, 0, 4, 0}, 0}));
  CHECK_THROWS_AS(objective(c, {ProblemKind::Acvrp, {0, 1, 2, 0, 3, 0, 4, 0}, 0}),
                  InvalidSolution);  // 1.1 > 1
  CHECK_THROWS_AS(objective(c, {ProblemKind::Acvrp, {0, 1, 3, 0, 2, 0}, 0}), InvalidSolution);
  CHECK_THROWS_AS(objective(c, {ProblemKind::Acvrp, {1, 3, 0, 2, 0, 4, 0}, 0}), InvalidSolution);

  const Solution s{ProblemKind::Acvrp, {0, 1, 3, 0, 2, 0, 4, 0}, 2.5};
  const Solution back = parse_solution(serialize_solution(s, 5));
  CHECK(back.sequence == s.sequence);
  CHECK(back.objective == s.objective);
  CHECK(back.kind == s.kind);
  CHECK_THROWS_AS(parse_solution("TOUR atsp 3 1\n0 1 2\n"), ParseError);
}

TEST_CASE("feasibility mask") {
  const auto inst = tight_cvrp();
  DecoderState at_depot;
  at_depot.visited = {true, false, false, false, false};
  DecoderState mid = at_depot;
  mid.current = 1;
  mid.visited[1] = true;
  mid.remaining_capacity = 0.4;
  DecoderState done = mid;
  done.visited.assign(5, true);
  done.done = true;
  const DecoderState states[] = {at_depot, mid, done};
  const ad::Mask m = feasibility_mask(inst, states);
  CHECK_FALSE(m(0, 0));  // already at the depot
  CHECK(m(0, 1));
  CHECK(m(0, 4));
  CHECK(m(1, 0));
  CHECK_FALSE(m(1, 1));  // visited
  CHECK_FALSE(m(1, 2));  // 0.5 > 0.4
  CHECK(m(1, 3));        // 0.4 fits exactly
  CHECK_FALSE(m(1, 4));
  CHECK(m(2, 0));
  CHECK(m.row(2).count() == 1);
}

TEST_CASE("rollouts produce verified solutions") {
  for (auto kind : {ProblemKind::Atsp, ProblemKind::Acvrp}) {
    for (auto mode : {DecodeMode::Greedy, DecodeMode::Sample}) {
      Fixture f(kind, 9, 4);
      const int starts = default_starts(f.inst);
      const auto r = rollout(f.ctx, f.slots, f.params, mode, starts, 11);
      REQUIRE(r.solutions.size() == static_cast<std::size_t>(starts));
      CHECK(r.log_probs.rows() == starts);
      std::set<int> firsts;
      for (int t = 0; t < starts; ++t) {
        const auto& sol = r.solutions[t];
        CHECK(oracle::verify(f.inst, sol).empty());
        CHECK(r.log_probs.value()(t, 0) <= 1e-12);
        firsts.insert(kind == ProblemKind::Atsp ? sol.sequence[0] : sol.sequence[1]);
      }
      CHECK(static_cast<int>(firsts.size()) == starts);  // distinct forced starts
    }
  }
}

TEST_CASE("greedy is deterministic and replay reproduces log-probabilities") {
  Fixture f(ProblemKind::Acvrp, 8, 2);
  const auto a = rollout(f.ctx, f.slots, f.params, DecodeMode::Greedy, 7, 1);
  const auto b = rollout(f.ctx, f.slots, f.params, DecodeMode::Greedy, 7, 99);
  CHECK(a.actions == b.actions);

  const auto s = rollout(f.ctx, f.slots, f.params, DecodeMode::Sample, 7, 5);
  const auto replay = rollout(f.ctx, f.slots, f.params, DecodeMode::Greedy, 7, 0, &s.actions);
  CHECK(replay.actions == s.actions);
  CHECK((replay.log_probs.value() - s.log_probs.value()).norm() < 1e-12);
  for (std::size_t t = 0; t < s.solutions.size(); ++t) {
    CHECK(replay.solutions[t].sequence == s.solutions[t].sequence);
  }
  ActionLists bad = s.actions;
  bad[0][0] = 1;  // trajectory 0 was forced onto customer 1 already
  CHECK_THROWS_AS(rollout(f.ctx, f.slots, f.params, DecodeMode::Greedy, 7, 0, &bad),
                  InvalidSolution);
}

TEST_CASE("logits are clipped and masked") {
  Fixture f(ProblemKind::Atsp, 6, 3);
  DecoderState s;
  s.visited = {true, false, true, false, false, false};
  s.current = 2;
  const auto logits = pointer_logits(f.ctx, s, f.slots, f.params);
  CHECK(std::isinf(logits[0]));
  CHECK(std::isinf(logits[2]));
  for (int j : {1, 3, 4, 5}) CHECK(std::abs(logits[j]) <= kLogitClip);

  DecoderState full = s;
  full.visited.assign(6, true);
  CHECK_THROWS_AS(pointer_logits(f.ctx, full, f.slots, f.params), AllMasked);
}

TEST_CASE("sampling frequencies follow the policy") {
  Fixture f(ProblemKind::Atsp, 3, 8, 8, 2);
  DecoderState s;
  s.visited = {true, false, false};
  s.current = 0;
  const auto logits = pointer_logits(f.ctx, s, f.slots, f.params);
  const double p1 = 1.0 / (1.0 + std::exp(logits[2] - logits[1]));

  const int draws = 100000;
  const auto r = rollout(f.ctx, f.slots, f.params, DecodeMode::Sample, 3 * draws, 21);
  int ones = 0;
  for (int t = 0; t < 3 * draws; t += 3) ones += r.actions[t][0] == 1;
  CHECK(std::abs(ones / static_cast<double>(draws) - p1) < 0.02);
}

TEST_CASE("decode mode parsing and best index") {
  CHECK(parse_decode_mode("sample") == DecodeMode::Sample);
  CHECK_THROWS_AS(parse_decode_mode("beam"), ConfigError);
  const std::vector<Solution> sols{{ProblemKind::Atsp, {}, 3.0},
                                   {ProblemKind::Atsp, {}, 1.0},
                                   {ProblemKind::Atsp, {}, 1.0}};
  CHECK(best_index(sols) == 1);
}
