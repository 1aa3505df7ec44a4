#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "radar/linalg.hpp"

namespace radar {

using DistanceMatrix = linalg::Matrix;

enum class ProblemKind { Atsp, Acvrp };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view text);

// Raw (un-normalized) problem data. For ACVRP, demands are expressed in units
// of the vehicle capacity so every route must satisfy sum(demand) <= 1.
struct RoutingInstance {
  ProblemKind kind = ProblemKind::Atsp;
  int n = 0;
  DistanceMatrix dist;
  std::vector<double> demands;
  double capacity = 0.0;
  int depot = 0;
  std::uint64_t seed = 0;

  bool is_cvrp() const { return kind == ProblemKind::Acvrp; }
};

enum class DemandKind { Uniform, SkewedSmall, SkewedLarge };
enum class MatrixGenerator { MatNet, NoisyEuclidean };

std::string_view to_string(DemandKind kind);
DemandKind parse_demand_kind(std::string_view text);
std::string_view to_string(MatrixGenerator gen);
MatrixGenerator parse_matrix_generator(std::string_view text);

/// Min-plus closure D[i][j] = min(D[i][j], D[i][k] + D[k][j]), repeated in full
/// Floyd-Warshall sweeps until nothing changes. max_sweeps <= 0 runs to the
/// fixpoint; a positive value caps the number of sweeps (relaxed regime).
DistanceMatrix triangle_closure(DistanceMatrix d, int max_sweeps = 0);

/// Off-diagonal entries uniform on (0, 1], zero diagonal, closed under the
/// triangle inequality.
DistanceMatrix gen_matnet_matrix(int n, std::uint64_t seed);

/// Euclidean distances of uniform points in the unit square, each ordered pair
/// multiplied by theta ~ N(1, sigma^2) clamped below at kMinTheta.
DistanceMatrix gen_noisy_euclidean(int n, double sigma, std::uint64_t seed);
inline constexpr double kMinTheta = 0.01;

/// ||D - D^T||_F / ||D + D^T||_F; zero for symmetric matrices.
double asymmetry_index(const DistanceMatrix& d);

/// Integer demands before scaling; index 0 is the depot and gets 0.
std::vector<int> gen_raw_demands(int n, DemandKind kind, std::uint64_t seed);

/// Raw demands divided by capacity_for(n).
std::vector<double> gen_demands(int n, DemandKind kind, std::uint64_t seed);

/// Vehicle capacity: {100: 50, 200: 80, 500: 100, 1000: 250}, otherwise
/// 30 + floor(n / 5) clipped to [10, 250].
double capacity_for(int n);

struct GeneratorSpec {
  ProblemKind kind = ProblemKind::Atsp;
  int n = 10;
  MatrixGenerator generator = MatrixGenerator::MatNet;
  double sigma = 0.0;
  DemandKind demand_kind = DemandKind::Uniform;
};

RoutingInstance generate_instance(const GeneratorSpec& spec, std::uint64_t seed);

/// Throws InvariantViolation naming the first failed check.
void validate(const RoutingInstance& inst);

std::string serialize_instance(const RoutingInstance& inst);
RoutingInstance parse_instance(std::string_view text);

void write_instance(const RoutingInstance& inst, const std::filesystem::path& path);
RoutingInstance read_instance(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view token);

}  // namespace radar
