#include "radar/solution.hpp"

#include <fstream>
#include <sstream>

#include "radar/error.hpp"

namespace radar {

double objective(const RoutingInstance& inst, const Solution& sol) {
  const auto& seq = sol.sequence;
  const int n = inst.n;
  if (sol.kind != inst.kind) throw InvalidSolution("solution kind differs from instance kind");
  auto check_node = [&](int v) {
    if (v < 0 || v >= n) throw InvalidSolution("node " + std::to_string(v) + " out of range");
  };
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  double total = 0.0;

  if (!inst.is_cvrp()) {
    if (static_cast<int>(seq.size()) != n) {
      throw InvalidSolution("tour has " + std::to_string(seq.size()) + " nodes, expected " +
                            std::to_string(n));
    }
    for (int v : seq) {
      check_node(v);
      if (seen[v]++) throw InvalidSolution("node " + std::to_string(v) + " visited twice");
    }
    for (int i = 0; i < n; ++i) total += inst.dist(seq[i], seq[(i + 1) % n]);
    return total;
  }

  if (seq.size() < 2 || seq.front() != inst.depot || seq.back() != inst.depot) {
    throw InvalidSolution("plan must start and end at the depot");
  }
  double load = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int v = seq[i];
    check_node(v);
    if (i > 0) total += inst.dist(seq[i - 1], v);
    if (v == inst.depot) {
      load = 0.0;
      continue;
    }
    if (seen[v]++) throw InvalidSolution("customer " + std::to_string(v) + " visited twice");
    load += inst.demands[v];
    if (load > 1.0 + kCapacityTolerance) {
      throw InvalidSolution("capacity exceeded at customer " + std::to_string(v));
    }
  }
  for (int v = 0; v < n; ++v) {
    if (v != inst.depot && !seen[v]) {
      throw InvalidSolution("customer " + std::to_string(v) + " not visited");
    }
  }
  return total;
}

std::string serialize_solution(const Solution& sol, int n) {
  std::string out = "SOL " + std::string(to_string(sol.kind)) + " " + std::to_string(n) + " " +
                    format_double(sol.objective) + "\n";
  for (std::size_t i = 0; i < sol.sequence.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(sol.sequence[i]);
  }
  out += '\n';
  return out;
}

Solution parse_solution(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag, kind, objective_text;
  int n = 0;
  if (!(in >> tag >> kind >> n >> objective_text) || tag != "SOL") {
    throw ParseError("line 1: expected 'SOL <kind> <n> <objective>'");
  }
  Solution sol;
  sol.kind = kind == "atsp" ? ProblemKind::Atsp : ProblemKind::Acvrp;
  if (kind != "atsp" && kind != "acvrp") throw ParseError("line 1: unknown kind '" + kind + "'");
  sol.objective = parse_double(objective_text);
  for (int v; in >> v;) sol.sequence.push_back(v);
  if (!in.eof()) throw ParseError("line 2: bad node index");
  return sol;
}

void write_solution(const std::filesystem::path& path, const Solution& sol, int n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << serialize_solution(sol, n);
}

}  // namespace radar
