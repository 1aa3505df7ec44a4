#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "radar/instances.hpp"

namespace radar {

// ATSP: a permutation of 0..n-1, closing arc implied.
// ACVRP: depot-delimited routes, e.g. 0 3 1 0 2 0.
struct Solution {
  ProblemKind kind = ProblemKind::Atsp;
  std::vector<int> sequence;
  double objective = 0.0;
};

/// Total raw distance of the solution, including the ATSP closing arc.
/// Throws InvalidSolution naming the first violated constraint.
double objective(const RoutingInstance& inst, const Solution& sol);

/// Tolerance on per-route scaled demand sums.
inline constexpr double kCapacityTolerance = 1e-9;

std::string serialize_solution(const Solution& sol, int n);
Solution parse_solution(std::string_view text);
void write_solution(const std::filesystem::path& path, const Solution& sol, int n);

}  // namespace radar
