// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <Eigen/SVD>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "model_fixtures.hpp"
#include "radar/config.hpp"
#include "radar/embed_init.hpp"
#include "radar/encoder.hpp"
#include "radar/experiments.hpp"
#include "radar/linalg.hpp"
#include "radar/oracle.hpp"
#include "radar/train.hpp"

using namespace radar;
namespace fs = std::filesystem;
using linalg::Matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Energy captured by the top-k singular values of z-scored n=100 matrices.
Outcome svd_energy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate_corpus({ProblemKind::Atsp, 100}, 100, 1001);
  const auto table = svd_energy_table(corpus, {10, 20, 30});
  const double want[] = {0.85, 0.93, 0.97};
  const double tol[] = {0.05, 0.04, 0.03};
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    ok = ok && std::abs(table[i].second - want[i]) <= tol[i];
    detail += fmt("k=%d %.4f (%.2f+-%.2f) ", table[i].first, table[i].second, want[i], tol[i]);
  }
  const double t = seconds_since(t0);
  return {ok && t < 30.0, detail + fmt("in %.1fs", t)};
}

// Optimal rank-k relative residual from a full dense SVD.
double dense_optimal_residual(const Matrix& a, int k) {
  const Eigen::BDCSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  return std::sqrt(s.tail(s.size() - k).squaredNorm()) / a.norm();
}

// 2. SVD features realize the best rank-k bilinear reconstruction.
Outcome residual_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  double worst = 0.0, worst_full = 0.0;
  for (int c = 0; c < 50; ++c) {
    const int n = 2 + static_cast<int>(rng() % 99);
    const int k = 1 + static_cast<int>(rng() % std::min(20, n));
    Matrix d;
    if (c % 3 == 0) {
      d = testing::random_tensor(n, n, rng());
    } else {
      GeneratorSpec spec{ProblemKind::Atsp, n};
      if (c % 3 == 2) {
        spec.generator = MatrixGenerator::NoisyEuclidean;
        spec.sigma = 0.2;
      }
      d = generate_instance(spec, rng()).dist;
    }
    const auto f = embed::svd_features(d, k, rng());
    const double got = embed::asymmetry_aware_residual(f.features, f.normalized, k);
    worst = std::max(worst, testing::rel_error(got, dense_optimal_residual(f.normalized, k)));
  }
  for (int n = 2; n <= 20; n += 2) {
    const auto d = generate_instance({ProblemKind::Atsp, n}, 77 + n).dist;
    const auto f = embed::svd_features(d, n, n);
    worst_full = std::max(worst_full, embed::asymmetry_aware_residual(f.features, f.normalized, n));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-5 && worst_full < 1e-6 && t < 60.0,
          fmt("max rel dev %.2e (<=1e-5), full-rank residual %.2e (<1e-6), %.1fs", worst,
              worst_full, t)};
}

// 3. Sinkhorn marginals, monotone column balancing, closed form.
Outcome sinkhorn_contract() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (int n : {10, 50, 200}) {
    const Matrix s = testing::random_tensor(n, n, 3000 + n);
    double prev = 0.0, row_dev = 0.0, col_dev = 0.0;
    for (int t = 1; t <= 10; ++t) {
      const Matrix p = encoder::sinkhorn(s, t);
      col_dev = (p.colwise().sum().array() - 1.0).abs().maxCoeff();
      row_dev = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
      if (t > 1 && !(col_dev < prev)) ok = false;
      prev = col_dev;
    }
    ok = ok && row_dev < 1e-9 && col_dev < 1e-2;
    detail += fmt("n=%d rows %.1e cols %.1e; ", n, row_dev, col_dev);
  }
  Matrix s(2, 2);
  s << 0.0, std::log(2.0), std::log(2.0), 0.0;
  Matrix expect(2, 2);
  expect << 1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0 / 3;
  const double closed = (encoder::sinkhorn(s, 10) - expect).cwiseAbs().maxCoeff();
  const double t = seconds_since(t0);
  return {ok && closed < 1e-6 && t < 10.0, detail + fmt("2x2 dev %.1e, %.1fs", closed, t)};
}

// 4. Full-model gradients against central differences.
Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  std::string where;
  for (auto kind : {ProblemKind::Atsp, ProblemKind::Acvrp}) {
    Model model(testing::tiny_model_config(kind), 41);
    const auto r = testing::check_model_gradient(model, generate_instance({kind, 6}, 42), 43);
    checked += r.checked;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      where = r.worst_param;
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 120.0,
          fmt("%zu params, max rel err %.2e at %s, %.1fs", checked, worst, where.c_str(), t)};
}

// 5. Sampled and greedy rollouts from random models never violate constraints.
Outcome feasibility() {
  const embed::InitVariant inits[] = {embed::InitVariant::Svd, embed::InitVariant::Random,
                                      embed::InitVariant::Knn, embed::InitVariant::Qr};
  std::string detail;
  bool ok = true;
  for (auto kind : {ProblemKind::Atsp, ProblemKind::Acvrp}) {
    int rollouts = 0, violations = 0;
    for (std::uint64_t r = 0; rollouts < 10000; ++r) {
      ModelConfig cfg = testing::tiny_model_config(kind);
      cfg.init.variant = inits[r % 4];
      cfg.enc.attn_norm = r % 2 ? encoder::AttnNorm::Softmax : encoder::AttnNorm::Sinkhorn;
      Model model(cfg, split_seed(5005, r));
      GeneratorSpec spec{kind, 3 + static_cast<int>(r % 18)};
      spec.demand_kind = static_cast<DemandKind>(r % 3);
      const auto inst = generate_instance(spec, split_seed(5006, r));
      ad::Tape tape;
      const auto mode = r % 5 == 0 ? decoder::DecodeMode::Greedy : decoder::DecodeMode::Sample;
      const auto res = model.solve(tape, inst, mode, decoder::default_starts(inst), r);
      for (const auto& sol : res.solutions) {
        ++rollouts;
        if (!oracle::verify(inst, sol).empty()) ++violations;
      }
    }
    ok = ok && violations == 0;
    detail += fmt("%s: %d rollouts, %d violations; ", std::string(to_string(kind)).c_str(),
                  rollouts, violations);
  }
  return {ok, detail};
}

// 6. Exact solvers against exhaustive enumeration.
Outcome oracle_equivalence() {
  int atsp_bad = 0, cvrp_bad = 0;
  for (int c = 0; c < 200; ++c) {
    const auto inst = generate_instance({ProblemKind::Atsp, 2 + c % 7}, split_seed(6006, c));
    const double hk = oracle::held_karp_atsp(inst.dist).objective;
    if (std::abs(hk - testing::brute_force_atsp(inst.dist)) > 1e-9 * std::max(1.0, hk)) ++atsp_bad;
  }
  for (int c = 0; c < 100; ++c) {
    GeneratorSpec spec{ProblemKind::Acvrp, 2 + c % 5};
    spec.demand_kind = static_cast<DemandKind>(c % 3);
    const auto inst = generate_instance(spec, split_seed(6007, c));
    const double ex = oracle::exact_acvrp(inst).objective;
    if (std::abs(ex - testing::brute_force_acvrp(inst)) > 1e-9 * std::max(1.0, ex)) ++cvrp_bad;
  }
  return {atsp_bad == 0 && cvrp_bad == 0,
          fmt("Held-Karp mismatches %d/200, exact ACVRP mismatches %d/100", atsp_bad, cvrp_bad)};
}

// 7. Default desk configuration on ATSP n=10.
Outcome desk_training() {
  const auto base = ExperimentConfig::parse("kind = atsp\nn = 10\n");
  const auto cfg = to_train_config(base);
  const auto t0 = std::chrono::steady_clock::now();
  const auto trained = train::train_loop(cfg);
  const double train_s = seconds_since(t0);
  const auto held_out = generate_corpus(cfg.gen, static_cast<int>(base.get_int("eval_instances")),
                                        base.get_u64("eval_seed"));
  const auto summary = evaluate(trained.model, held_out, {}, decoder::DecodeMode::Greedy, 0, 0);
  bool exact = true;
  for (const auto& row : summary.rows) exact = exact && row.gap.reference_kind == oracle::ReferenceKind::Exact;
  return {exact && summary.mean_gap < 0.10 && train_s <= 1800.0,
          fmt("%d epochs in %.0fs, mean gap %.2f%% over %zu held-out instances (<10%%)",
              cfg.epochs, train_s, 100.0 * summary.mean_gap, summary.rows.size())};
}

// 8. Paired ablations: same base seed, same training and evaluation instances.
Outcome ablation_ordering() {
  const auto base = ExperimentConfig::parse("kind = atsp\nn = 10\n");
  AblationGrid main{"attention",
                    {{"svd+sinkhorn/T=10", {}},
                     {"random+softmax", {{"init", "random"}, {"attn_norm", "softmax"}}},
                     {"T=1", {{"sinkhorn_iters", "1"}}},
                     {"T=5", {{"sinkhorn_iters", "5"}}}}};
  AblationGrid asym{"asymmetry", {}};
  for (const auto& cell : preset_grid("asymmetry").cells) {
    if (cell.label.rfind("sigma=0.3/", 0) == 0) asym.cells.push_back(cell);
  }
  auto results = run_ablation(base, main);
  const auto more = run_ablation(base, asym);
  results.insert(results.end(), more.begin(), more.end());
  std::fputs(format_ablation_table(results).c_str(), stdout);
  for (const auto& r : results) {
    if (!r.ok) return {false, "cell " + r.label + " failed: " + r.error};
  }
  const double full = results[0].mean_gap, none = results[1].mean_gap;
  const double t1 = results[2].mean_gap, t5 = results[3].mean_gap, t10 = full;
  const double svd03 = results[4].mean_gap, rnd03 = results[5].mean_gap;
  const bool a = full <= none, b = t1 >= t5 && t5 >= t10, c = svd03 <= rnd03;
  return {a && b && c,
          fmt("(svd,sinkhorn) %.4f <= (random,softmax) %.4f [%s]; T=1/5/10 %.4f >= %.4f >= %.4f "
              "[%s]; sigma=0.3 svd %.4f <= random %.4f [%s]",
              full, none, a ? "ok" : "violated", t1, t5, t10, b ? "ok" : "violated", svd03, rnd03,
              c ? "ok" : "violated")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Two identical runs produce byte-identical artifacts.
Outcome determinism() {
  auto run = [](const fs::path& dir) {
    std::string bytes;
    fs::create_directories(dir / "atsp");
    fs::create_directories(dir / "acvrp");
    cmd_gen({ProblemKind::Atsp, 12}, 20, 9, dir / "atsp");
    cmd_gen({ProblemKind::Acvrp, 12, MatrixGenerator::NoisyEuclidean, 0.2}, 20, 9, dir / "acvrp");
    for (const char* sub : {"atsp", "acvrp"}) {
      for (const auto& f : corpus_files(dir / sub)) bytes += slurp(f);
    }
    const auto cfg = to_train_config(ExperimentConfig::parse(
        "kind = acvrp\nn = 8\nepochs = 3\ninstances_per_epoch = 32\nbatch = 8\nseed = 5\n"));
    train::train_loop(cfg, {dir, {}});
    return std::make_pair(bytes, slurp(dir / "metrics.tsv") + slurp(dir / "model.rdr"));
  };
  const auto a = run(testing::scratch_dir("accept_det_a"));
  const auto b = run(testing::scratch_dir("accept_det_b"));
  const bool ok = !a.first.empty() && !a.second.empty() && a == b;
  return {ok, fmt("corpora %s (%zu bytes), metrics+checkpoint %s (%zu bytes)",
                  a.first == b.first ? "identical" : "differ", a.first.size(),
                  a.second == b.second ? "identical" : "differ", a.second.size())};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"svd energy", svd_energy},
      {"residual identity", residual_identity},
      {"sinkhorn contract", sinkhorn_contract},
      {"gradient correctness", gradients},
      {"feasibility", feasibility},
      {"oracle equivalence", oracle_equivalence},
      {"desk training", desk_training},
      {"ablation ordering", ablation_ordering},
      {"determinism", determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
