#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "radar/encoder.hpp"
#include "radar/error.hpp"
#include "radar/instances.hpp"
#include "test_support.hpp"

using namespace radar;
using namespace radar::encoder;
using testing::random_tensor;

namespace {

double column_deviation(const Matrix& p) {
  return (p.colwise().sum().array() - 1.0).abs().maxCoeff();
}

double row_deviation(const Matrix& p) {
  return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace

TEST_CASE("sinkhorn 2x2 closed form") {
  Matrix s(2, 2);
  s << 0.0, std::log(2.0), std::log(2.0), 0.0;
  const Matrix p = sinkhorn(s, 10);
  Matrix expect(2, 2);
  expect << 1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0 / 3;
  CHECK((p - expect).cwiseAbs().maxCoeff() < 1e-6);
  // Shifting every score is a no-op.
  CHECK((sinkhorn((s.array() + 7.0).matrix(), 10) - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sinkhorn concentrates on a dominant permutation") {
  Matrix s = Matrix::Zero(4, 4);
  const int perm[] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i) s(i, perm[i]) = 20.0;
  const Matrix p = sinkhorn(s, 10);
  for (int i = 0; i < 4; ++i) CHECK(p(i, perm[i]) > 0.999);
}

TEST_CASE("sinkhorn marginals") {
  for (int n : {10, 50, 200}) {
    const Matrix s = random_tensor(n, n, 40 + n);
    const Matrix p = sinkhorn(s, 10);
    CAPTURE(n);
    CHECK(row_deviation(p) < 1e-9);
    CHECK(column_deviation(p) < 1e-2);
    CHECK(p.minCoeff() >= 0.0);
    double prev = column_deviation(sinkhorn(s, 1));
    for (int t = 2; t <= 10; ++t) {
      const double dev = column_deviation(sinkhorn(s, t));
      CHECK(dev < prev);
      prev = dev;
    }
  }
  CHECK_THROWS_AS(sinkhorn(Matrix::Zero(2, 2), 0), ConfigError);
}

TEST_CASE("sinkhorn reduces column imbalance relative to softmax") {
  Matrix s = random_tensor(20, 20, 3);
  s.col(4).array() += 3.0;  // an attractor column
  ad::Tape t;
  const Matrix soft = ad::softmax_rows(t.constant(s)).value();
  const Matrix sink = sinkhorn(s, 10);
  const std::vector<Matrix> a{soft}, b{sink};
  CHECK(column_imbalance(b) < 0.1 * column_imbalance(a));
}

TEST_CASE("sinkhorn backward matches finite differences") {
  for (int iters : {1, 3, 10}) {
    const Matrix s = random_tensor(5, 5, 7 + iters);
    const Matrix w = random_tensor(5, 5, 100);
    const auto g = testing::check_gradient(
        [&](ad::Tape&, ad::Var x) { return ad::dot_const(sinkhorn(x, iters), w); }, s);
    CAPTURE(iters);
    CHECK(g.max_rel_error < 1e-5);
  }
}

TEST_CASE("fused scores") {
  const int n = 5, hidden = 4, heads = 2;
  const Matrix d = gen_matnet_matrix(n, 2);
  const Matrix dt = d.transpose();
  const ad::Tensor dot = random_tensor(n, n, 1);
  const ad::Tensor w1 = random_tensor(heads, 3 * hidden, 2);
  const ad::Tensor b1 = random_tensor(heads, hidden, 3);
  const ad::Tensor w2 = random_tensor(heads, hidden, 4);
  const ad::Tensor b2 = random_tensor(heads, 1, 5);
  const Matrix weights = random_tensor(n, n, 6);

  SUBCASE("values follow the definition") {
    ad::Tape t;
    const FusionVars f{t.constant(w1), t.constant(b1), t.constant(w2), t.constant(b2)};
    const Matrix got = fused_scores(t.constant(dot), d, dt, f, 1).value();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double expect = b2(1, 0);
        for (int u = 0; u < hidden; ++u) {
          const double z = w1(1, u) * dot(i, j) + w1(1, hidden + u) * d(i, j) +
                           w1(1, 2 * hidden + u) * d(j, i) + b1(1, u);
          expect += w2(1, u) * std::max(z, 0.0);
        }
        CHECK(got(i, j) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  SUBCASE("a two-unit map passes the dot product through") {
    ad::Tensor iw1 = ad::Tensor::Zero(1, 6), ib1 = ad::Tensor::Zero(1, 2);
    ad::Tensor iw2(1, 2), ib2 = ad::Tensor::Zero(1, 1);
    iw1(0, 0) = 1.0;   // unit 0: relu(x)
    iw1(0, 1) = -1.0;  // unit 1: relu(-x)
    iw2 << 1.0, -1.0;
    ad::Tape t;
    const FusionVars f{t.constant(iw1), t.constant(ib1), t.constant(iw2), t.constant(ib2)};
    CHECK((fused_scores(t.constant(dot), d, dt, f, 0).value() - dot).norm() < 1e-14);
  }
  SUBCASE("gradients") {
    auto run = [&](ad::Tape& t, ad::Var x, ad::Var a, ad::Var b, ad::Var c, ad::Var e) {
      return ad::dot_const(fused_scores(x, d, dt, FusionVars{a, b, c, e}, 1), weights);
    };
    CHECK(testing::check_gradient(
              [&](ad::Tape& t, ad::Var x) {
                return run(t, x, t.constant(w1), t.constant(b1), t.constant(w2), t.constant(b2));
              },
              dot)
              .max_rel_error < 1e-6);
    CHECK(testing::check_gradient(
              [&](ad::Tape& t, ad::Var v) {
                return run(t, t.constant(dot), v, t.constant(b1), t.constant(w2), t.constant(b2));
              },
              w1)
              .max_rel_error < 1e-6);
    CHECK(testing::check_gradient(
              [&](ad::Tape& t, ad::Var v) {
                return run(t, t.constant(dot), t.constant(w1), v, t.constant(w2), t.constant(b2));
              },
              b1)
              .max_rel_error < 1e-6);
    CHECK(testing::check_gradient(
              [&](ad::Tape& t, ad::Var v) {
                return run(t, t.constant(dot), t.constant(w1), t.constant(b1), v, t.constant(b2));
              },
              w2)
              .max_rel_error < 1e-6);
    CHECK(testing::check_gradient(
              [&](ad::Tape& t, ad::Var v) {
                return run(t, t.constant(dot), t.constant(w1), t.constant(b1), t.constant(w2), v);
              },
              b2)
              .max_rel_error < 1e-6);
  }
}

TEST_CASE("encoder layer shapes, attention, and input gradient") {
  for (auto attn : {AttnNorm::Sinkhorn, AttnNorm::Softmax}) {
    for (auto normk : {NormKind::Instance, NormKind::Layer}) {
      EncoderConfig cfg;
      cfg.model_dim = 8;
      cfg.n_heads = 2;
      cfg.n_layers = 2;
      cfg.ffn_dim = 12;
      cfg.fusion_hidden = 4;
      cfg.attn_norm = attn;
      cfg.norm_kind = normk;
      ParamSet params;
      Rng rng(3);
      const auto layers = register_encoder(params, cfg, rng);
      CHECK(layers.size() == 2);
      CHECK(params.contains("enc.1.fuse_w1"));

      const Matrix d = linalg::zscore_normalize(gen_matnet_matrix(6, 4)).values;
      const ad::Tensor x0 = random_tensor(6, 8, 9);
      ad::Tape t;
      const auto out = encode(t.constant(x0), d, layers, cfg, params, true);
      CHECK(out.final.rows() == 6);
      CHECK(out.final.cols() == 8);
      REQUIRE(out.attention.size() == 2);
      REQUIRE(out.attention[0].size() == 2);
      for (const auto& a : out.attention[0]) CHECK(row_deviation(a) < 1e-9);
      if (attn == AttnNorm::Sinkhorn) {
        for (const auto& a : out.attention[1]) CHECK(column_deviation(a) < 0.05);
      }

      const ad::Tensor w = random_tensor(6, 8, 10);
      const auto g = testing::check_gradient(
          [&](ad::Tape& tp, ad::Var x) {
            return ad::dot_const(encode(x, d, layers, cfg, params).final, w);
          },
          x0);
      CAPTURE(to_string(attn));
      CAPTURE(to_string(normk));
      CHECK(g.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("encoder config validation") {
  EncoderConfig cfg;
  cfg.model_dim = 10;
  cfg.n_heads = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_heads = 2;
  cfg.sinkhorn_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_attn_norm("softmax") == AttnNorm::Softmax);
  CHECK_THROWS_AS(parse_norm_kind("batch"), ConfigError);
}
