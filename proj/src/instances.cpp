#include "radar/instances.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "radar/error.hpp"
#include "radar/rng.hpp"

namespace radar {

std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::Atsp ? "atsp" : "acvrp";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "atsp") return ProblemKind::Atsp;
  if (text == "acvrp") return ProblemKind::Acvrp;
  throw ConfigError("unknown problem kind '" + std::string(text) + "'");
}

std::string_view to_string(DemandKind kind) {
  switch (kind) {
    case DemandKind::Uniform: return "uniform";
    case DemandKind::SkewedSmall: return "skewed_small";
    case DemandKind::SkewedLarge: return "skewed_large";
  }
  return "uniform";
}

DemandKind parse_demand_kind(std::string_view text) {
  if (text == "uniform") return DemandKind::Uniform;
  if (text == "skewed_small") return DemandKind::SkewedSmall;
  if (text == "skewed_large") return DemandKind::SkewedLarge;
  throw ConfigError("unknown demand kind '" + std::string(text) + "'");
}

std::string_view to_string(MatrixGenerator gen) {
  return gen == MatrixGenerator::MatNet ? "matnet" : "noisy_euclidean";
}

MatrixGenerator parse_matrix_generator(std::string_view text) {
  if (text == "matnet") return MatrixGenerator::MatNet;
  if (text == "noisy_euclidean" || text == "noisy") return MatrixGenerator::NoisyEuclidean;
  throw ConfigError("unknown matrix generator '" + std::string(text) + "'");
}

DistanceMatrix triangle_closure(DistanceMatrix d, int max_sweeps) {
  const Eigen::Index n = d.rows();
  for (int sweep = 0; max_sweeps <= 0 || sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double via = d(i, k);
        for (Eigen::Index j = 0; j < n; ++j) {
          const double candidate = via + d(k, j);
          if (candidate < d(i, j)) {
            d(i, j) = candidate;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }
  return d;
}

DistanceMatrix gen_matnet_matrix(int n, std::uint64_t seed) {
  Rng rng(seed);
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) d(i, j) = 1.0 - uniform01(rng);  // (0, 1]
    }
  }
  return triangle_closure(std::move(d));
}

DistanceMatrix gen_noisy_euclidean(int n, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, 2>> points(static_cast<std::size_t>(n));
  for (auto& p : points) {
    p[0] = uniform01(rng);
    p[1] = uniform01(rng);
  }
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = points[i][0] - points[j][0];
      const double dy = points[i][1] - points[j][1];
      const double theta = std::max(kMinTheta, 1.0 + sigma * standard_normal(rng));
      d(i, j) = std::hypot(dx, dy) * theta;
    }
  }
  return d;
}

double asymmetry_index(const DistanceMatrix& d) {
  const double denom = (d + d.transpose()).norm();
  return denom > 0.0 ? (d - d.transpose()).norm() / denom : 0.0;
}

namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

}  // namespace

std::vector<int> gen_raw_demands(int n, DemandKind kind, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> raw(static_cast<std::size_t>(std::max(n, 0)), 0);
  if (n < 2) return raw;
  const int customers = n - 1;
  if (kind == DemandKind::Uniform) {
    for (int i = 1; i < n; ++i) raw[i] = uniform_int(rng, 1, 9);
    return raw;
  }
  // Exactly round(0.8 m) customers come from the majority range; which ones is
  // decided by a seeded shuffle.
  const int majority = static_cast<int>(std::lround(0.8 * customers));
  std::vector<bool> in_majority(static_cast<std::size_t>(customers), false);
  std::fill(in_majority.begin(), in_majority.begin() + majority, true);
  for (int i = customers - 1; i > 0; --i) {
    const int j = uniform_int(rng, 0, i);
    std::swap(in_majority[i], in_majority[j]);
  }
  const bool small_majority = kind == DemandKind::SkewedSmall;
  for (int c = 0; c < customers; ++c) {
    const bool small = in_majority[c] == small_majority;
    raw[c + 1] = small ? uniform_int(rng, 1, 3) : uniform_int(rng, 4, 10);
  }
  return raw;
}

std::vector<double> gen_demands(int n, DemandKind kind, std::uint64_t seed) {
  const std::vector<int> raw = gen_raw_demands(n, kind, seed);
  const double capacity = capacity_for(n);
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(),
                 [&](int r) { return static_cast<double>(r) / capacity; });
  return out;
}

double capacity_for(int n) {
  switch (n) {
    case 100: return 50.0;
    case 200: return 80.0;
    case 500: return 100.0;
    case 1000: return 250.0;
    default: break;
  }
  return static_cast<double>(std::clamp(30 + n / 5, 10, 250));
}

RoutingInstance generate_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  RoutingInstance inst;
  inst.kind = spec.kind;
  inst.n = spec.n;
  inst.seed = seed;
  const std::uint64_t matrix_seed = split_seed(seed, 0);
  inst.dist = spec.generator == MatrixGenerator::MatNet
                  ? gen_matnet_matrix(spec.n, matrix_seed)
                  : gen_noisy_euclidean(spec.n, spec.sigma, matrix_seed);
  if (inst.is_cvrp()) {
    inst.capacity = capacity_for(spec.n);
    inst.demands = gen_demands(spec.n, spec.demand_kind, split_seed(seed, 1));
  }
  return inst;
}

void validate(const RoutingInstance& inst) {
  if (inst.n < 1) throw InvariantViolation("n must be positive");
  if (inst.dist.rows() != inst.n || inst.dist.cols() != inst.n) {
    throw InvariantViolation("distance matrix is not n x n");
  }
  for (int i = 0; i < inst.n; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      const double v = inst.dist(i, j);
      if (!std::isfinite(v)) {
        throw InvariantViolation("non-finite distance at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
      }
      if (v < 0.0) {
        throw InvariantViolation("negative distance at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
      }
    }
    if (inst.dist(i, i) != 0.0) {
      throw InvariantViolation("nonzero diagonal at " + std::to_string(i));
    }
  }
  if (!inst.is_cvrp()) return;
  if (inst.n < 2) throw InvariantViolation("acvrp needs a depot and a customer");
  if (!(inst.capacity > 0.0)) throw InvariantViolation("capacity must be positive");
  if (static_cast<int>(inst.demands.size()) != inst.n) {
    throw InvariantViolation("demand count != n");
  }
  if (inst.demands[inst.depot] != 0.0) throw InvariantViolation("depot demand must be 0");
  for (int i = 0; i < inst.n; ++i) {
    if (i == inst.depot) continue;
    const double q = inst.demands[i];
    if (!(q > 0.0 && q <= 1.0)) {
      throw InvariantViolation("customer " + std::to_string(i) + " demand outside (0, 1]");
    }
  }
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token) {
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError("bad number '" + std::string(token) + "'");
  }
  return value;
}

std::string serialize_instance(const RoutingInstance& inst) {
  std::string out = "AVRP 1\n";
  out += "kind " + std::string(to_string(inst.kind)) + "\n";
  out += "n " + std::to_string(inst.n) + "\n";
  if (inst.is_cvrp()) {
    out += "capacity " + format_double(inst.capacity) + "\n";
    out += "demands";
    for (double q : inst.demands) out += " " + format_double(q);
    out += "\n";
  }
  out += "matrix\n";
  for (int i = 0; i < inst.n; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      if (j) out += ' ';
      out += format_double(inst.dist(i, j));
    }
    out += '\n';
  }
  return out;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : stream_(std::string(text)) {}

  std::vector<std::string> next() {
    std::string line;
    if (!std::getline(stream_, line)) {
      throw ParseError("line " + std::to_string(line_no_ + 1) + ": unexpected end of file");
    }
    ++line_no_;
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    return tokens;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(line_no_) + ": " + what);
  }

  double number(const std::string& token) const {
    try {
      return parse_double(token);
    } catch (const ParseError&) {
      fail("bad number '" + token + "'");
    }
  }

 private:
  std::istringstream stream_;
  int line_no_ = 0;
};

}  // namespace

RoutingInstance parse_instance(std::string_view text) {
  LineReader in(text);
  RoutingInstance inst;

  auto header = in.next();
  if (header.size() != 2 || header[0] != "AVRP" || header[1] != "1") in.fail("expected 'AVRP 1'");

  auto kind = in.next();
  if (kind.size() != 2 || kind[0] != "kind") in.fail("expected 'kind atsp|acvrp'");
  if (kind[1] == "atsp") {
    inst.kind = ProblemKind::Atsp;
  } else if (kind[1] == "acvrp") {
    inst.kind = ProblemKind::Acvrp;
  } else {
    in.fail("unknown kind '" + kind[1] + "'");
  }

  auto count = in.next();
  if (count.size() != 2 || count[0] != "n") in.fail("expected 'n <int>'");
  const double n_value = in.number(count[1]);
  if (n_value < 1 || n_value != std::floor(n_value) || n_value > 100000) in.fail("bad node count");
  inst.n = static_cast<int>(n_value);

  if (inst.is_cvrp()) {
    auto cap = in.next();
    if (cap.size() != 2 || cap[0] != "capacity") in.fail("expected 'capacity <decimal>'");
    inst.capacity = in.number(cap[1]);
    auto dem = in.next();
    if (dem.empty() || dem[0] != "demands") in.fail("expected 'demands ...'");
    if (static_cast<int>(dem.size()) != inst.n + 1) in.fail("expected n demands");
    for (int i = 0; i < inst.n; ++i) inst.demands.push_back(in.number(dem[i + 1]));
  }

  auto marker = in.next();
  if (marker.size() != 1 || marker[0] != "matrix") in.fail("expected 'matrix'");
  inst.dist.resize(inst.n, inst.n);
  for (int i = 0; i < inst.n; ++i) {
    auto row = in.next();
    if (static_cast<int>(row.size()) != inst.n) in.fail("expected n matrix entries");
    for (int j = 0; j < inst.n; ++j) inst.dist(i, j) = in.number(row[j]);
  }

  validate(inst);
  return inst;
}

void write_instance(const RoutingInstance& inst, const std::filesystem::path& path) {
  validate(inst);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << serialize_instance(inst);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RoutingInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

}  // namespace radar
