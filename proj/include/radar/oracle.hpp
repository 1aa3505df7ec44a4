#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radar/instances.hpp"
#include "radar/solution.hpp"

namespace radar::oracle {

inline constexpr int kMaxHeldKarpNodes = 16;
inline constexpr int kMaxExactCustomers = 10;

struct TourResult {
  double objective = 0.0;
  std::vector<int> tour;  // starts at node 0
};

/// Optimal directed Hamiltonian cycle by bitmask DP over O(2^n n) states.
/// Among optimal tours the lexicographically smallest (starting at 0) wins.
/// Throws TooLarge for n > 16.
TourResult held_karp_atsp(const DistanceMatrix& d);

struct PlanResult {
  double objective = 0.0;
  std::vector<int> plan;  // depot-delimited
};

/// Exact ACVRP optimum: every capacity-feasible customer subset gets its best
/// route by a depot-anchored Held-Karp, then subsets are combined by a DP over
/// set partitions. Throws TooLarge above 10 customers and Infeasible if one
/// demand exceeds the capacity.
PlanResult exact_acvrp(const RoutingInstance& inst);

/// Greedy nearest outgoing neighbor from node 0 (ATSP) or the depot (ACVRP,
/// returning when no remaining customer fits). Ties go to the lower index.
Solution nearest_neighbor(const RoutingInstance& inst);

/// Empty when valid; otherwise one description per violated check.
std::vector<std::string> verify(const RoutingInstance& inst, const Solution& sol,
                                double objective_tolerance = 1e-9);

enum class ReferenceKind { Exact, Heuristic };
std::string_view to_string(ReferenceKind kind);

struct GapReport {
  double method_objective = 0.0;
  double reference_objective = 0.0;
  double gap = 0.0;  // fraction
  ReferenceKind reference_kind = ReferenceKind::Heuristic;
};

GapReport make_gap(double method, double reference, ReferenceKind kind);

struct Reference {
  double objective = 0.0;
  ReferenceKind kind = ReferenceKind::Heuristic;
};

/// Exact optimum when the instance is small enough, else nearest neighbor.
Reference best_reference(const RoutingInstance& inst);

}  // namespace radar::oracle
