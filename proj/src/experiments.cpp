#include "radar/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "radar/error.hpp"
#include "radar/linalg.hpp"
#include "radar/parallel.hpp"
#include "radar/rng.hpp"
#include "radar/tape.hpp"
#include "radar/train.hpp"

namespace radar {

namespace fs = std::filesystem;

std::string corpus_file_name(ProblemKind kind, int n, int index) {
  char idx[16];
  std::snprintf(idx, sizeof idx, "%05d", index);
  return std::string(to_string(kind)) + "_n" + std::to_string(n) + "_" + idx + ".avrp";
}

std::vector<fs::path> corpus_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".avrp") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<RoutingInstance> read_corpus(const fs::path& dir) {
  std::vector<RoutingInstance> out;
  for (const auto& f : corpus_files(dir)) out.push_back(read_instance(f));
  return out;
}

std::vector<RoutingInstance> generate_corpus(const GeneratorSpec& spec, int count,
                                             std::uint64_t seed) {
  if (count < 0) throw ConfigError("count must be >= 0");
  std::vector<RoutingInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_instance(spec, split_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

std::vector<fs::path> cmd_gen(const GeneratorSpec& spec, int count, std::uint64_t seed,
                              const fs::path& out_dir) {
  std::error_code ec;
  if (!fs::is_directory(out_dir, ec)) {
    throw IoError("output directory '" + out_dir.string() + "' does not exist");
  }
  const auto instances = generate_corpus(spec, count, seed);
  std::vector<fs::path> written;
  for (int i = 0; i < count; ++i) {
    written.push_back(out_dir / corpus_file_name(spec.kind, spec.n, i));
    write_instance(instances[static_cast<std::size_t>(i)], written.back());
  }
  return written;
}

EvalSummary evaluate(const Model& model, const std::vector<RoutingInstance>& instances,
                     const std::vector<std::string>& names, decoder::DecodeMode mode,
                     int n_starts, std::uint64_t seed) {
  if (!names.empty() && names.size() != instances.size()) {
    throw ConfigError("evaluate: names and instances differ in length");
  }
  if (instances.empty()) throw ConfigError("evaluate: no instances");
  for (const auto& inst : instances) {
    if (inst.kind != model.config().kind) {
      throw ConfigError("model solves " + std::string(to_string(model.config().kind)) +
                        " but corpus holds " + std::string(to_string(inst.kind)));
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  EvalSummary summary;
  summary.rows.resize(instances.size());
  parallel_for(instances.size(), worker_threads(), [&](std::size_t i) {
    const RoutingInstance& inst = instances[i];
    ad::Tape tape;
    const int starts = n_starts > 0 ? n_starts : decoder::default_starts(inst);
    auto result = model.solve(tape, inst, mode, starts, split_seed(seed, i));
    EvalRow& row = summary.rows[i];
    row.name = names.empty() ? "instance_" + std::to_string(i) : names[i];
    row.n = inst.n;
    row.solution = std::move(result.solutions[decoder::best_index(result.solutions)]);
    const auto ref = oracle::best_reference(inst);
    row.gap = oracle::make_gap(row.solution.objective, ref.objective, ref.kind);
  });
  const double count = static_cast<double>(instances.size());
  for (const auto& row : summary.rows) {
    summary.mean_objective += row.gap.method_objective / count;
    summary.mean_reference += row.gap.reference_objective / count;
    summary.mean_gap += row.gap.gap / count;
  }
  summary.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

std::string format_eval_table(const EvalSummary& summary) {
  std::string out = "instance\tn\tobjective\treference\treference_kind\tgap\n";
  for (const auto& r : summary.rows) {
    out += r.name + "\t" + std::to_string(r.n) + "\t" + format_double(r.gap.method_objective) +
           "\t" + format_double(r.gap.reference_objective) + "\t" +
           std::string(oracle::to_string(r.gap.reference_kind)) + "\t" +
           format_double(r.gap.gap) + "\n";
  }
  out += "mean\t-\t" + format_double(summary.mean_objective) + "\t" +
         format_double(summary.mean_reference) + "\t-\t" + format_double(summary.mean_gap) +
         "\n";
  return out;
}

std::vector<std::pair<int, double>> svd_energy_table(const std::vector<RoutingInstance>& corpus,
                                                      const std::vector<int>& ks,
                                                      std::uint64_t seed) {
  if (corpus.empty()) throw ConfigError("svd-analyze: empty corpus");
  std::vector<std::vector<double>> ratios(corpus.size(), std::vector<double>(ks.size()));
  parallel_for(corpus.size(), worker_threads(), [&](std::size_t i) {
    const linalg::Matrix dn = linalg::zscore_normalize(corpus[i].dist).values;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const int k = std::min(ks[j], static_cast<int>(dn.rows()));
      const auto f = linalg::truncated_svd(dn, k, split_seed(seed, i));
      ratios[i][j] = linalg::energy_ratio(f, dn);
    }
  });
  std::vector<std::pair<int, double>> table;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    double sum = 0.0;
    for (const auto& r : ratios) sum += r[j];
    table.emplace_back(ks[j], sum / static_cast<double>(corpus.size()));
  }
  return table;
}

std::string format_energy_table(const std::vector<std::pair<int, double>>& table) {
  std::string out = "k\tenergy_ratio\n";
  for (const auto& [k, r] : table) out += std::to_string(k) + "\t" + format_double(r) + "\n";
  return out;
}

std::vector<std::string> preset_grid_names() {
  return {"svd-sinkhorn", "sinkhorn-iters", "asymmetry", "normalization", "rank", "init"};
}

AblationGrid vary_grid(const std::string& key, const std::vector<std::string>& values) {
  AblationGrid g{"vary-" + key, {}};
  for (const auto& v : values) g.cells.push_back({key + "=" + v, {{key, v}}});
  return g;
}

AblationGrid preset_grid(const std::string& name) {
  if (name == "svd-sinkhorn") {
    return {name,
            {{"svd+sinkhorn", {{"init", "svd"}, {"attn_norm", "sinkhorn"}}},
             {"svd+softmax", {{"init", "svd"}, {"attn_norm", "softmax"}}},
             {"random+sinkhorn", {{"init", "random"}, {"attn_norm", "sinkhorn"}}},
             {"random+softmax", {{"init", "random"}, {"attn_norm", "softmax"}}}}};
  }
  if (name == "sinkhorn-iters") {
    auto g = vary_grid("sinkhorn_iters", {"1", "5", "10"});
    g.name = name;
    for (auto& c : g.cells) c.overrides.emplace_back("attn_norm", "sinkhorn");
    return g;
  }
  if (name == "asymmetry") {
    AblationGrid g{name, {}};
    for (const char* sigma : {"0.1", "0.2", "0.3"}) {
      for (const char* init : {"svd", "random"}) {
        g.cells.push_back({std::string("sigma=") + sigma + "/" + init,
                           {{"generator", "noisy_euclidean"}, {"sigma", sigma}, {"init", init}}});
      }
    }
    return g;
  }
  if (name == "normalization") {
    auto g = vary_grid("dist_norm", {"zscore", "minmax", "raw"});
    g.name = name;
    return g;
  }
  if (name == "rank") {
    auto g = vary_grid("rank_k", {"2", "5", "10"});
    g.name = name;
    for (auto& c : g.cells) c.overrides.emplace_back("init", "svd");
    return g;
  }
  if (name == "init") {
    auto g = vary_grid("init", {"svd", "random", "one_hot", "knn", "evd", "mds", "qr"});
    g.name = name;
    return g;
  }
  throw ConfigError("unknown ablation grid '" + name + "'");
}

namespace {

std::string cell_dir_name(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (c == '/' || c == '=' || c == '+' || c == ' ') c = '_';
  }
  return out;
}

}  // namespace

std::vector<AblationResult> run_ablation(const ExperimentConfig& base, const AblationGrid& grid,
                                         const fs::path& out_dir) {
  std::vector<RoutingInstance> fixed_eval;
  std::vector<std::string> fixed_names;
  const std::string eval_dir = base.get("eval_corpus");
  if (!eval_dir.empty()) {
    for (const auto& f : corpus_files(eval_dir)) {
      fixed_eval.push_back(read_instance(f));
      fixed_names.push_back(f.filename().string());
    }
  }

  std::vector<AblationResult> results;
  for (const auto& cell : grid.cells) {
    AblationResult r;
    r.label = cell.label;
    try {
      ExperimentConfig cfg = base;
      for (const auto& [k, v] : cell.overrides) cfg.set(k, v);
      const train::TrainConfig tc = to_train_config(cfg);
      train::TrainOutputs outputs;
      if (!out_dir.empty()) {
        outputs.dir = out_dir / cell_dir_name(cell.label);
        fs::create_directories(outputs.dir);
      }
      const auto trained = train::train_loop(tc, outputs);
      std::vector<RoutingInstance> eval = fixed_eval;
      if (eval.empty()) {
        eval = generate_corpus(tc.gen, cfg.get_int("eval_instances"),
                               cfg.get_u64("eval_seed"));
      }
      const auto summary =
          evaluate(trained.model, eval, fixed_names, decoder::DecodeMode::Greedy, 0, 0);
      r.mean_objective = summary.mean_objective;
      r.mean_gap = summary.mean_gap;
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_ablation_table(const std::vector<AblationResult>& results) {
  std::string out = "cell\tstatus\tmean_objective\tmean_gap\n";
  for (const auto& r : results) {
    if (r.ok) {
      out += r.label + "\tok\t" + format_double(r.mean_objective) + "\t" +
             format_double(r.mean_gap) + "\n";
    } else {
      out += r.label + "\tfailed\t-\t-\n";
    }
  }
  return out;
}

}  // namespace radar
