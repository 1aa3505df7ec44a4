#include "radar/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "radar/error.hpp"

namespace radar::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

TourResult held_karp_atsp(const DistanceMatrix& d) {
  const int n = static_cast<int>(d.rows());
  if (n > kMaxHeldKarpNodes) {
    throw TooLarge("held_karp_atsp: n=" + std::to_string(n) + " exceeds " +
                   std::to_string(kMaxHeldKarpNodes));
  }
  if (n == 0) return {};
  if (n == 1) return {0.0, {0}};

  // rest[mask][j]: cheapest way to leave j, visit every node outside `mask`,
  // and return to 0. `mask` holds visited nodes (always 0 and j).
  const std::uint32_t full = (1u << n) - 1;
  std::vector<double> rest(static_cast<std::size_t>(1u << n) * n, kInf);
  auto at = [&](std::uint32_t mask, int j) -> double& { return rest[mask * n + j]; };
  for (int j = 1; j < n; ++j) at(full, j) = d(j, 0);
  for (std::uint32_t mask = full; mask-- > 1;) {
    if (!(mask & 1u)) continue;
    for (int j = 0; j < n; ++j) {
      if (!(mask & (1u << j))) continue;
      if (j == 0 && mask != 1u) continue;
      double best = kInf;
      for (int k = 1; k < n; ++k) {
        if (mask & (1u << k)) continue;
        best = std::min(best, d(j, k) + at(mask | (1u << k), k));
      }
      at(mask, j) = best;
    }
  }

  TourResult out;
  out.objective = at(1u, 0);
  out.tour.push_back(0);
  std::uint32_t mask = 1u;
  int cur = 0;
  while (mask != full) {
    for (int k = 1; k < n; ++k) {
      if (mask & (1u << k)) continue;
      const double via = d(cur, k) + at(mask | (1u << k), k);
      if (close(via, at(mask, cur))) {
        mask |= 1u << k;
        cur = k;
        out.tour.push_back(k);
        break;
      }
    }
  }
  return out;
}

PlanResult exact_acvrp(const RoutingInstance& inst) {
  const int m = inst.n - 1;  // customers 1..n-1, depot 0
  if (m > kMaxExactCustomers) {
    throw TooLarge("exact_acvrp: " + std::to_string(m) + " customers exceed " +
                   std::to_string(kMaxExactCustomers));
  }
  for (int c = 1; c < inst.n; ++c) {
    if (inst.demands[c] > 1.0 + kCapacityTolerance) {
      throw Infeasible("customer " + std::to_string(c) + " exceeds vehicle capacity");
    }
  }
  if (m == 0) return {0.0, {0, 0}};

  const std::uint32_t subsets = 1u << m;
  auto node = [](int bit) { return bit + 1; };

  // path[S][j]: depot -> all of S -> ending at customer bit j.
  std::vector<double> path(static_cast<std::size_t>(subsets) * m, kInf);
  std::vector<int> prev(path.size(), -1);
  for (int j = 0; j < m; ++j) path[(1u << j) * m + j] = inst.dist(0, node(j));
  std::vector<double> load(subsets, 0.0);
  for (std::uint32_t s = 1; s < subsets; ++s) {
    const int low = std::countr_zero(s);
    load[s] = load[s & (s - 1)] + inst.demands[node(low)];
  }
  for (std::uint32_t s = 1; s < subsets; ++s) {
    if (load[s] > 1.0 + kCapacityTolerance) continue;
    for (int j = 0; j < m; ++j) {
      const double base = path[s * m + j];
      if (!(s & (1u << j)) || base == kInf) continue;
      for (int k = 0; k < m; ++k) {
        if (s & (1u << k)) continue;
        const std::uint32_t t = s | (1u << k);
        const double cand = base + inst.dist(node(j), node(k));
        if (cand < path[t * m + k]) {
          path[t * m + k] = cand;
          prev[t * m + k] = j;
        }
      }
    }
  }
  std::vector<double> route(subsets, kInf);
  std::vector<int> route_end(subsets, -1);
  for (std::uint32_t s = 1; s < subsets; ++s) {
    if (load[s] > 1.0 + kCapacityTolerance) continue;
    for (int j = 0; j < m; ++j) {
      if (!(s & (1u << j))) continue;
      const double cand = path[s * m + j] + inst.dist(node(j), 0);
      if (cand < route[s]) {
        route[s] = cand;
        route_end[s] = j;
      }
    }
  }

  // best[S]: cheapest set of routes covering S; the route containing the
  // lowest customer of S is enumerated explicitly.
  std::vector<double> best(subsets, kInf);
  std::vector<std::uint32_t> choice(subsets, 0);
  best[0] = 0.0;
  for (std::uint32_t s = 1; s < subsets; ++s) {
    const std::uint32_t low = s & (~s + 1);
    const std::uint32_t others = s ^ low;
    for (std::uint32_t sub = others;; sub = (sub - 1) & others) {
      const std::uint32_t r = sub | low;
      if (route[r] < kInf) {
        const double cand = route[r] + best[s ^ r];
        if (cand < best[s]) {
          best[s] = cand;
          choice[s] = r;
        }
      }
      if (sub == 0) break;
    }
  }

  PlanResult out;
  out.objective = best[subsets - 1];
  out.plan.push_back(0);
  for (std::uint32_t s = subsets - 1; s != 0;) {
    const std::uint32_t r = choice[s];
    std::vector<int> order;
    std::uint32_t cur_set = r;
    for (int j = route_end[r]; j >= 0;) {
      order.push_back(node(j));
      const int p = prev[cur_set * m + j];
      cur_set ^= 1u << j;
      j = p;
    }
    std::reverse(order.begin(), order.end());
    out.plan.insert(out.plan.end(), order.begin(), order.end());
    out.plan.push_back(0);
    s ^= r;
  }
  return out;
}

Solution nearest_neighbor(const RoutingInstance& inst) {
  const int n = inst.n;
  Solution sol;
  sol.kind = inst.kind;
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  if (!inst.is_cvrp()) {
    int cur = 0;
    visited[0] = true;
    sol.sequence.push_back(0);
    for (int step = 1; step < n; ++step) {
      int next = -1;
      for (int j = 0; j < n; ++j) {
        if (!visited[j] && (next < 0 || inst.dist(cur, j) < inst.dist(cur, next))) next = j;
      }
      visited[next] = true;
      sol.sequence.push_back(next);
      cur = next;
    }
  } else {
    int cur = inst.depot;
    double remaining = 1.0;
    int left = n - 1;
    sol.sequence.push_back(inst.depot);
    while (left > 0) {
      int next = -1;
      for (int j = 0; j < n; ++j) {
        if (j == inst.depot || visited[j]) continue;
        if (inst.demands[j] > remaining + kCapacityTolerance) continue;
        if (next < 0 || inst.dist(cur, j) < inst.dist(cur, next)) next = j;
      }
      if (next < 0) {
        sol.sequence.push_back(inst.depot);
        cur = inst.depot;
        remaining = 1.0;
        continue;
      }
      visited[next] = true;
      remaining -= inst.demands[next];
      sol.sequence.push_back(next);
      cur = next;
      --left;
    }
    sol.sequence.push_back(inst.depot);
  }
  sol.objective = objective(inst, sol);
  return sol;
}

std::vector<std::string> verify(const RoutingInstance& inst, const Solution& sol,
                                double objective_tolerance) {
  std::vector<std::string> issues;
  const int n = inst.n;
  const auto& seq = sol.sequence;
  if (sol.kind != inst.kind) issues.push_back("kind mismatch");

  std::vector<int> count(static_cast<std::size_t>(n), 0);
  bool in_range = true;
  for (int v : seq) {
    if (v < 0 || v >= n) {
      issues.push_back("node " + std::to_string(v) + " out of range");
      in_range = false;
    } else {
      ++count[v];
    }
  }
  if (!in_range) return issues;

  double recomputed = 0.0;
  if (!inst.is_cvrp()) {
    for (int v = 0; v < n; ++v) {
      if (count[v] == 0) issues.push_back("node " + std::to_string(v) + " missing");
      if (count[v] > 1) issues.push_back("node " + std::to_string(v) + " duplicated");
    }
    if (!seq.empty()) {
      for (std::size_t i = 0; i < seq.size(); ++i) {
        recomputed += inst.dist(seq[i], seq[(i + 1) % seq.size()]);
      }
    }
  } else {
    if (seq.empty() || seq.front() != inst.depot) issues.push_back("plan does not start at depot");
    if (seq.empty() || seq.back() != inst.depot) issues.push_back("plan does not end at depot");
    for (int v = 0; v < n; ++v) {
      if (v == inst.depot) continue;
      if (count[v] == 0) issues.push_back("customer " + std::to_string(v) + " missing");
      if (count[v] > 1) issues.push_back("customer " + std::to_string(v) + " duplicated");
    }
    double route_load = 0.0;
    int route_no = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i > 0) recomputed += inst.dist(seq[i - 1], seq[i]);
      if (seq[i] == inst.depot) {
        if (route_load > 1.0 + kCapacityTolerance) {
          issues.push_back("route " + std::to_string(route_no) + " load " +
                           format_double(route_load) + " exceeds capacity");
        }
        route_load = 0.0;
        ++route_no;
      } else {
        route_load += inst.demands[seq[i]];
      }
    }
    if (route_load > 1.0 + kCapacityTolerance) issues.push_back("final route exceeds capacity");
  }
  if (std::abs(recomputed - sol.objective) > objective_tolerance) {
    issues.push_back("objective claimed " + format_double(sol.objective) + " but recomputed " +
                     format_double(recomputed));
  }
  return issues;
}

std::string_view to_string(ReferenceKind kind) {
  return kind == ReferenceKind::Exact ? "exact" : "heuristic";
}

GapReport make_gap(double method, double reference, ReferenceKind kind) {
  if (!(reference > 0.0)) throw DegenerateInput("gap: reference objective must be positive");
  return {method, reference, (method - reference) / reference, kind};
}

Reference best_reference(const RoutingInstance& inst) {
  if (!inst.is_cvrp() && inst.n <= kMaxHeldKarpNodes) {
    return {held_karp_atsp(inst.dist).objective, ReferenceKind::Exact};
  }
  if (inst.is_cvrp() && inst.n - 1 <= kMaxExactCustomers) {
    return {exact_acvrp(inst).objective, ReferenceKind::Exact};
  }
  return {nearest_neighbor(inst).objective, ReferenceKind::Heuristic};
}

}  // namespace radar::oracle
