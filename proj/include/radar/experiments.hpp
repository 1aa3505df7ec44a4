#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "radar/config.hpp"
#include "radar/decoder.hpp"
#include "radar/instances.hpp"
#include "radar/model.hpp"
#include "radar/oracle.hpp"

namespace radar {

/// `<kind>_n<n>_<index>.avrp`
std::string corpus_file_name(ProblemKind kind, int n, int index);

/// Sorted list of `*.avrp` files in `dir`. IoError if `dir` is not a directory.
std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& dir);
std::vector<RoutingInstance> read_corpus(const std::filesystem::path& dir);

/// Instance `i` of a generated corpus uses seed split_seed(seed, i).
std::vector<RoutingInstance> generate_corpus(const GeneratorSpec& spec, int count,
                                             std::uint64_t seed);

/// Writes `count` instances into the existing directory `out_dir`.
std::vector<std::filesystem::path> cmd_gen(const GeneratorSpec& spec, int count,
                                           std::uint64_t seed,
                                           const std::filesystem::path& out_dir);

struct EvalRow {
  std::string name;
  int n = 0;
  Solution solution;
  oracle::GapReport gap;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_objective = 0.0;
  double mean_reference = 0.0;
  double mean_gap = 0.0;
  double wallclock_s = 0.0;
};

/// Multi-start decoding of every instance against the strongest available
/// reference. n_starts = 0 uses one trajectory per node (customer for ACVRP).
EvalSummary evaluate(const Model& model, const std::vector<RoutingInstance>& instances,
                     const std::vector<std::string>& names, decoder::DecodeMode mode,
                     int n_starts, std::uint64_t seed);

/// Tab-separated: header, one row per instance, final `mean` row.
std::string format_eval_table(const EvalSummary& summary);

/// Mean energy ratio of the z-scored matrices per k (k is clipped to n).
std::vector<std::pair<int, double>> svd_energy_table(const std::vector<RoutingInstance>& corpus,
                                                      const std::vector<int>& ks,
                                                      std::uint64_t seed = 0);
std::string format_energy_table(const std::vector<std::pair<int, double>>& table);

struct AblationCell {
  std::string label;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct AblationGrid {
  std::string name;
  std::vector<AblationCell> cells;
};

/// Preset grids: svd-sinkhorn, sinkhorn-iters, asymmetry, normalization, rank, init.
AblationGrid preset_grid(const std::string& name);
std::vector<std::string> preset_grid_names();

/// One cell per value of `key`.
AblationGrid vary_grid(const std::string& key, const std::vector<std::string>& values);

struct AblationResult {
  std::string label;
  bool ok = false;
  std::string error;
  double mean_objective = 0.0;
  double mean_gap = 0.0;
};

/// Trains and evaluates every cell from `base` + overrides. All cells share the
/// base seed; cells with the same generator settings see the same training and
/// evaluation instances. A failing cell is recorded and the run continues.
/// Per-cell outputs go to out_dir/<label>/ when out_dir is non-empty.
std::vector<AblationResult> run_ablation(const ExperimentConfig& base, const AblationGrid& grid,
                                         const std::filesystem::path& out_dir = {});

std::string format_ablation_table(const std::vector<AblationResult>& results);

}  // namespace radar
