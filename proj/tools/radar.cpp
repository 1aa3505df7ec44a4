// radar: command-line front end (gen | train | eval | ablate | svd-analyze).
//
// Exit codes: 0 ok, 1 I/O or bad input file, 2 usage/config, 3 numerical divergence.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "radar/config.hpp"
#include "radar/error.hpp"
#include "radar/experiments.hpp"
#include "radar/model.hpp"
#include "radar/train.hpp"

namespace fs = std::filesystem;
using namespace radar;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidRank:
    case ErrorKind::SizeExceedsWidth:
    case ErrorKind::WidthMismatch:
      return kExitUsage;
    case ErrorKind::NumericalDivergence:
      return kExitDivergence;
    default:
      return kExitIo;
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : ExperimentConfig::load(path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural solver for asymmetric routing problems (ATSP, ACVRP)."};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate an instance corpus");
  std::string gen_kind = "atsp", gen_generator = "matnet", gen_demand = "uniform", gen_out;
  int gen_n = 10, gen_count = 100;
  double gen_sigma = 0.0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "atsp | acvrp")->capture_default_str();
  gen->add_option("--n", gen_n, "nodes per instance (depot included)")->capture_default_str();
  gen->add_option("--count", gen_count, "number of instances")->capture_default_str();
  gen->add_option("--generator", gen_generator, "matnet | noisy_euclidean")
      ->capture_default_str();
  gen->add_option("--sigma", gen_sigma, "noise level for noisy_euclidean")->capture_default_str();
  gen->add_option("--demand-kind", gen_demand, "uniform | skewed_small | skewed_large")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "master seed")->capture_default_str();
  gen->add_option("--out", gen_out, "existing output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a model; writes model.rdr and metrics.tsv");
  std::string tr_config, tr_out = ".";
  std::vector<std::string> tr_sets;
  tr->add_option("config", tr_config, "config file (key = value)")->required();
  tr->add_option("--out", tr_out, "output directory (created if missing)")->capture_default_str();
  tr->add_option("--set", tr_sets, "override a config key: key=value (repeatable)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus (TSV on stdout)");
  std::string ev_ckpt, ev_corpus, ev_mode = "greedy";
  int ev_starts = 0;
  std::uint64_t ev_seed = 0;
  ev->add_option("--checkpoint", ev_ckpt, "model.rdr file")->required();
  ev->add_option("--corpus", ev_corpus, "directory of .avrp instances")->required();
  ev->add_option("--mode", ev_mode, "greedy | sample")->capture_default_str();
  ev->add_option("--n-starts", ev_starts, "trajectories per instance (0 = one per node)")
      ->capture_default_str();
  ev->add_option("--seed", ev_seed, "sampling seed")->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and evaluate an ablation grid (TSV on stdout)");
  std::string ab_config, ab_grid, ab_vary, ab_out;
  std::vector<std::string> ab_sets;
  ab->add_option("config", ab_config, "base config file (key = value)")->required();
  auto* grid_opt = ab->add_option("--grid", ab_grid, "preset grid name");
  grid_opt->check(CLI::IsMember(preset_grid_names()));
  ab->add_option("--vary", ab_vary, "generic grid: key=v1,v2,...")->excludes(grid_opt);
  ab->add_option("--out", ab_out, "directory for per-cell checkpoints and metrics");
  ab->add_option("--set", ab_sets, "override a base config key: key=value (repeatable)");

  const std::string keys = describe_config_keys() + "\nRADAR_THREADS caps worker threads.";
  tr->footer(keys);
  ab->footer(keys);

  // svd-analyze
  auto* sv = app.add_subcommand("svd-analyze", "Mean SVD energy ratio per rank k");
  std::string sv_corpus, sv_ks = "10,20,30";
  std::uint64_t sv_seed = 0;
  sv->add_option("--corpus", sv_corpus, "directory of .avrp instances")->required();
  sv->add_option("--k", sv_ks, "comma-separated ranks")->capture_default_str();
  sv->add_option("--seed", sv_seed, "sketch seed")->capture_default_str();
  app.footer(keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      GeneratorSpec spec;
      spec.kind = parse_problem_kind(gen_kind);
      spec.n = gen_n;
      spec.generator = parse_matrix_generator(gen_generator);
      spec.sigma = gen_sigma;
      spec.demand_kind = parse_demand_kind(gen_demand);
      if (gen_n < 2) throw ConfigError("--n must be >= 2");
      if (gen_sigma < 0.0) throw ConfigError("--sigma must be >= 0");
      const auto files = cmd_gen(spec, gen_count, gen_seed, gen_out);
      std::cerr << "wrote " << files.size() << " instances to " << gen_out << "\n";
    } else if (*tr) {
      const ExperimentConfig cfg = load_config(tr_config, tr_sets);
      const train::TrainConfig tc = to_train_config(cfg);
      fs::create_directories(tr_out);
      train::TrainOutputs outputs;
      outputs.dir = tr_out;
      outputs.on_epoch = [&](const train::EpochMetrics& m) {
        std::cerr << train::format_metrics(m, true);
      };
      train::train_loop(tc, outputs);
    } else if (*ev) {
      const Model model = Model::load(ev_ckpt);
      std::vector<RoutingInstance> instances;
      std::vector<std::string> names;
      for (const auto& f : corpus_files(ev_corpus)) {
        instances.push_back(read_instance(f));
        names.push_back(f.filename().string());
      }
      const auto summary = evaluate(model, instances, names, decoder::parse_decode_mode(ev_mode),
                                    ev_starts, ev_seed);
      std::cout << format_eval_table(summary);
      std::cerr << "wallclock_s\t" << summary.wallclock_s << "\n";
    } else if (*ab) {
      const ExperimentConfig cfg = load_config(ab_config, ab_sets);
      AblationGrid grid;
      if (!ab_grid.empty()) {
        grid = preset_grid(ab_grid);
      } else if (!ab_vary.empty()) {
        const auto eq = ab_vary.find('=');
        if (eq == std::string::npos) throw ConfigError("--vary expects key=v1,v2,...");
        grid = vary_grid(ab_vary.substr(0, eq), split_list(ab_vary.substr(eq + 1)));
      } else {
        throw ConfigError("ablate needs --grid or --vary");
      }
      const auto results = run_ablation(cfg, grid, ab_out);
      for (const auto& r : results) {
        if (!r.ok) std::cerr << "cell " << r.label << " failed: " << r.error << "\n";
      }
      std::cout << format_ablation_table(results);
    } else if (*sv) {
      std::vector<int> ks;
      for (const auto& k : split_list(sv_ks)) {
        try {
          ks.push_back(std::stoi(k));
        } catch (const std::exception&) {
          throw ConfigError("--k expects integers, got '" + k + "'");
        }
        if (ks.back() < 1) throw ConfigError("--k values must be >= 1");
      }
      std::cout << format_energy_table(svd_energy_table(read_corpus(sv_corpus), ks, sv_seed));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
