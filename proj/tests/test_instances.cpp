#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "radar/error.hpp"
#include "radar/instances.hpp"
#include "test_support.hpp"

using namespace radar;

TEST_CASE("gen_matnet_matrix basics") {
  CHECK(gen_matnet_matrix(1, 3) == DistanceMatrix::Zero(1, 1));
  for (int n : {2, 4, 17, 30}) {
    const auto d = gen_matnet_matrix(n, 100 + n);
    CAPTURE(n);
    CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.allFinite());
    CHECK(d.minCoeff() >= 0.0);
    CHECK(d.maxCoeff() <= 1.0);
    CHECK(testing::satisfies_triangle(d, 1e-12));
    // Off-diagonal entries stay strictly positive after closure.
    CHECK((d + DistanceMatrix::Identity(n, n)).minCoeff() > 0.0);
  }
  CHECK(gen_matnet_matrix(12, 9) == gen_matnet_matrix(12, 9));
  CHECK(gen_matnet_matrix(12, 9) != gen_matnet_matrix(12, 10));
}

TEST_CASE("triangle inequality on sampled triples of a large matrix") {
  const auto d = gen_matnet_matrix(80, 4);
  Rng rng(1);
  for (int t = 0; t < 20000; ++t) {
    const int i = rng() % 80, j = rng() % 80, k = rng() % 80;
    CHECK_LE(d(i, k), d(i, j) + d(j, k) + 1e-12);
  }
}

TEST_CASE("triangle_closure") {
  DistanceMatrix d(3, 3);
  d << 0, 10, 1, 1, 0, 10, 10, 1, 0;
  const auto c = triangle_closure(d);
  CHECK(c(0, 1) == 2.0);  // 0 -> 2 -> 1
  CHECK(c(1, 2) == 2.0);  // 1 -> 0 -> 2
  CHECK(c(2, 0) == 2.0);  // 2 -> 1 -> 0
  CHECK((c.array() <= d.array()).all());
  CHECK(testing::satisfies_triangle(c));

  const auto metric = gen_matnet_matrix(10, 2);
  CHECK(triangle_closure(metric) == metric);

  // A capped number of sweeps still never increases an entry.
  const DistanceMatrix raw = testing::random_tensor(12, 12, 5).cwiseAbs();
  DistanceMatrix z = raw;
  z.diagonal().setZero();
  const auto one = triangle_closure(z, 1);
  CHECK((one.array() <= z.array()).all());
  CHECK(testing::satisfies_triangle(triangle_closure(z), 1e-12));
}

TEST_CASE("gen_noisy_euclidean") {
  const auto sym = gen_noisy_euclidean(20, 0.0, 3);
  CHECK((sym - sym.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(asymmetry_index(sym) < 1e-12);
  CHECK(testing::satisfies_triangle(sym, 1e-12));

  const double a1 = asymmetry_index(gen_noisy_euclidean(50, 0.1, 8));
  const double a3 = asymmetry_index(gen_noisy_euclidean(50, 0.3, 8));
  CHECK(a1 > 0.0);
  CHECK(a3 > a1);

  // Both directions of a pair scale the same Euclidean distance.
  const auto base = gen_noisy_euclidean(2, 0.0, 6);
  const auto noisy = gen_noisy_euclidean(2, 0.5, 6);
  CHECK(noisy(0, 1) / base(0, 1) >= kMinTheta);
  CHECK(noisy(1, 0) / base(1, 0) >= kMinTheta);
  CHECK(noisy(0, 1) != noisy(1, 0));

  // Huge noise is clamped, never negative.
  const auto wild = gen_noisy_euclidean(30, 5.0, 1);
  CHECK(wild.minCoeff() >= 0.0);
  CHECK(wild.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("demands") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto raw = gen_raw_demands(30, DemandKind::Uniform, seed);
    CHECK(raw[0] == 0);
    for (int i = 1; i < 30; ++i) {
      CHECK(raw[i] >= 1);
      CHECK(raw[i] <= 9);
    }
  }
  const auto small = gen_raw_demands(10001, DemandKind::SkewedSmall, 4);
  const auto large = gen_raw_demands(10001, DemandKind::SkewedLarge, 4);
  int le3_small = 0, le3_large = 0;
  for (int i = 1; i < 10001; ++i) {
    le3_small += small[i] <= 3;
    le3_large += large[i] <= 3;
    CHECK(small[i] >= 1);
    CHECK(small[i] <= 10);
  }
  CHECK(le3_small / 10000.0 == doctest::Approx(0.8).epsilon(0.025));
  CHECK(le3_large / 10000.0 == doctest::Approx(0.2).epsilon(0.1));

  const auto scaled = gen_demands(10, DemandKind::Uniform, 3);
  const auto r = gen_raw_demands(10, DemandKind::Uniform, 3);
  CHECK(scaled[0] == 0.0);
  for (int i = 1; i < 10; ++i) {
    CHECK(scaled[i] == r[i] / 32.0);
    CHECK(scaled[i] > 0.0);
    CHECK(scaled[i] <= 1.0);
  }
}

TEST_CASE("capacity_for") {
  CHECK(capacity_for(100) == 50);
  CHECK(capacity_for(200) == 80);
  CHECK(capacity_for(500) == 100);
  CHECK(capacity_for(1000) == 250);
  CHECK(capacity_for(10) == 32);
  CHECK(capacity_for(20) == 34);
  CHECK(capacity_for(5000) == 250);
}

TEST_CASE("generate_instance is deterministic and valid") {
  for (auto kind : {ProblemKind::Atsp, ProblemKind::Acvrp}) {
    GeneratorSpec spec;
    spec.kind = kind;
    spec.n = 15;
    const auto a = generate_instance(spec, 77);
    const auto b = generate_instance(spec, 77);
    CHECK(serialize_instance(a) == serialize_instance(b));
    CHECK_NOTHROW(validate(a));
    CHECK(a.is_cvrp() == (kind == ProblemKind::Acvrp));
  }
  GeneratorSpec noisy{ProblemKind::Acvrp, 12, MatrixGenerator::NoisyEuclidean, 0.2,
                      DemandKind::SkewedLarge};
  CHECK_NOTHROW(validate(generate_instance(noisy, 5)));
}

TEST_CASE("instance text round trip") {
  GeneratorSpec spec{ProblemKind::Acvrp, 9, MatrixGenerator::NoisyEuclidean, 0.3,
                     DemandKind::SkewedSmall};
  const auto inst = generate_instance(spec, 12);
  const std::string text = serialize_instance(inst);
  const auto back = parse_instance(text);
  CHECK(back.kind == inst.kind);
  CHECK(back.n == inst.n);
  CHECK(back.capacity == inst.capacity);
  CHECK(back.demands == inst.demands);
  CHECK(back.dist == inst.dist);  // exact: shortest round-trip decimals
  CHECK(serialize_instance(back) == text);

  const auto dir = testing::scratch_dir("instances");
  write_instance(inst, dir / "x.avrp");
  CHECK(serialize_instance(read_instance(dir / "x.avrp")) == text);
  CHECK_THROWS_AS(read_instance(dir / "missing.avrp"), IoError);
  CHECK_THROWS_AS(write_instance(inst, dir / "no" / "such" / "x.avrp"), IoError);
}

TEST_CASE("instance parse errors") {
  const std::string good = "AVRP 1\nkind atsp\nn 2\nmatrix\n0 1\n2 0\n";
  CHECK_NOTHROW(parse_instance(good));
  CHECK_THROWS_AS(parse_instance("AVRP 1\nkind atsp\nn 2\nmatrix\n0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("AVRP 2\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("AVRP 1\nkind tsp\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("AVRP 1\nkind atsp\nn 2\nmatrix\n0 x\n2 0\n"), ParseError);
  CHECK_THROWS_AS(parse_instance("AVRP 1\nkind atsp\nn 2\nmatrix\n0 -1\n2 0\n"),
                  InvariantViolation);
  CHECK_THROWS_AS(parse_instance("AVRP 1\nkind atsp\nn 2\nmatrix\n1 1\n2 0\n"),
                  InvariantViolation);
  CHECK_THROWS_AS(
      parse_instance("AVRP 1\nkind acvrp\nn 2\ncapacity 10\ndemands 0 1.5\nmatrix\n0 1\n1 0\n"),
      InvariantViolation);
  try {
    parse_instance("AVRP 1\nkind atsp\nn 2\nmatrix\n0 1 3\n2 0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("asymmetry index") {
  DistanceMatrix d(2, 2);
  d << 0, 1, 3, 0;
  CHECK(asymmetry_index(d) == doctest::Approx(std::sqrt(8.0) / std::sqrt(32.0)));
  CHECK(asymmetry_index(DistanceMatrix::Zero(3, 3)) == 0.0);
}
