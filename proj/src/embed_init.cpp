#include "radar/embed_init.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "radar/error.hpp"
#include "radar/rng.hpp"

namespace radar::embed {

std::string_view to_string(InitVariant v) {
  switch (v) {
    case InitVariant::Svd: return "svd";
    case InitVariant::Random: return "random";
    case InitVariant::OneHot: return "one_hot";
    case InitVariant::Knn: return "knn";
    case InitVariant::Evd: return "evd";
    case InitVariant::Mds: return "mds";
    case InitVariant::Qr: return "qr";
  }
  return "svd";
}

InitVariant parse_init_variant(std::string_view text) {
  for (auto v : {InitVariant::Svd, InitVariant::Random, InitVariant::OneHot, InitVariant::Knn,
                 InitVariant::Evd, InitVariant::Mds, InitVariant::Qr}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown init scheme '" + std::string(text) + "'");
}

int feature_width(const InitScheme& scheme) {
  switch (scheme.variant) {
    case InitVariant::Svd:
    case InitVariant::Qr: return 2 * scheme.rank_k;
    case InitVariant::Evd:
    case InitVariant::Mds: return scheme.rank_k;
    case InitVariant::Random: return 1;
    case InitVariant::OneHot: return scheme.one_hot_width;
    case InitVariant::Knn: return scheme.knn_k;
  }
  return 0;
}

SvdFeatures svd_features(const Matrix& d, int k, std::uint64_t seed) {
  if (d.rows() != d.cols()) throw WidthMismatch("svd_features: matrix must be square");
  SvdFeatures out;
  out.normalized = linalg::zscore_normalize(d).values;
  out.factors = linalg::truncated_svd(out.normalized, k, seed);
  const linalg::Vector root = out.factors.sigma.cwiseMax(0.0).cwiseSqrt();
  out.features.resize(d.rows(), 2 * k);
  out.features.leftCols(k) = out.factors.u * root.asDiagonal();
  out.features.rightCols(k) = out.factors.v * root.asDiagonal();
  return out;
}

double asymmetry_aware_residual(const Matrix& x, const Matrix& d_normalized, int k) {
  if (x.cols() != 2 * k) {
    throw WidthMismatch("asymmetry_aware_residual: width " + std::to_string(x.cols()) +
                        " != 2k = " + std::to_string(2 * k));
  }
  if (x.rows() != d_normalized.rows() || d_normalized.rows() != d_normalized.cols()) {
    throw WidthMismatch("asymmetry_aware_residual: node count mismatch");
  }
  const Matrix left = x.leftCols(k);    // X W1
  const Matrix right = x.rightCols(k);  // X W2
  const double norm = d_normalized.norm();
  if (norm <= 0.0) throw DegenerateInput("asymmetry_aware_residual: zero target");
  return (left * right.transpose() - d_normalized).norm() / norm;
}

Matrix one_hot_features(int n, int width) {
  if (n > width) {
    throw SizeExceedsWidth(std::to_string(n) + " nodes do not fit a one-hot width of " +
                           std::to_string(width));
  }
  Matrix out = Matrix::Zero(n, width);
  for (int i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix random_features(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix out(n, 1);
  for (int i = 0; i < n; ++i) out(i, 0) = uniform01(rng);
  return out;
}

Matrix knn_features(const Matrix& d, int knn_k) {
  const int n = static_cast<int>(d.rows());
  if (knn_k < 1 || knn_k > n - 1) {
    throw InvalidRank("knn_features: knn_k=" + std::to_string(knn_k) + " outside [1, n-1]");
  }
  Matrix out(n, knn_k);
  std::vector<int> cols;
  for (int i = 0; i < n; ++i) {
    cols.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) cols.push_back(j);
    }
    std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) { return d(i, a) < d(i, b); });
    for (int c = 0; c < knn_k; ++c) out(i, c) = d(i, cols[c]);
  }
  return out;
}

namespace {

Matrix pad_columns(const Matrix& m, Eigen::Index width) {
  if (m.cols() == width) return m;
  Matrix out = Matrix::Zero(m.rows(), width);
  out.leftCols(m.cols()) = m;
  return out;
}

// Left and right blocks of width k_eff, each padded separately to k.
Matrix pad_halves(const Matrix& m, int k_eff, int k) {
  Matrix out = Matrix::Zero(m.rows(), 2 * k);
  out.leftCols(k_eff) = m.leftCols(k_eff);
  out.middleCols(k, k_eff) = m.rightCols(k_eff);
  return out;
}

}  // namespace

Matrix distance_features(const InitScheme& scheme, const Matrix& raw_d, std::uint64_t seed) {
  const int n = static_cast<int>(raw_d.rows());
  const int k = scheme.rank_k;
  const int k_eff = std::min(k, n);
  switch (scheme.variant) {
    case InitVariant::Svd:
      return pad_halves(svd_features(raw_d, k_eff, seed).features, k_eff, k);
    case InitVariant::Qr:
      return pad_halves(linalg::qr_embed(linalg::zscore_normalize(raw_d).values, k_eff), k_eff, k);
    case InitVariant::Evd:
      return pad_columns(linalg::evd_embed(linalg::zscore_normalize(raw_d).values, k_eff), k);
    case InitVariant::Mds:
      return pad_columns(linalg::mds_embed(raw_d, k_eff), k);
    case InitVariant::Random:
      return random_features(n, seed);
    case InitVariant::OneHot:
      return one_hot_features(n, scheme.one_hot_width);
    case InitVariant::Knn: {
      const int kk = std::min(scheme.knn_k, n - 1);
      if (kk < 1) return Matrix::Zero(n, scheme.knn_k);
      Matrix nearest = knn_features(raw_d, kk);
      Matrix out(n, scheme.knn_k);
      out.leftCols(kk) = nearest;
      // Short rows repeat their farthest retained neighbor.
      for (int c = kk; c < scheme.knn_k; ++c) out.col(c) = nearest.col(kk - 1);
      return out;
    }
  }
  throw ConfigError("unhandled init scheme");
}

ad::Var project_features(ad::Var x, std::optional<ad::Var> node_features, ad::Var weights,
                         ad::Var bias) {
  ad::Var input = x;
  if (node_features && node_features->cols() > 0) {
    const ad::Var parts[] = {x, *node_features};
    input = ad::concat_cols(parts);
  }
  if (input.cols() != weights.rows()) {
    throw WidthMismatch("project_features: input width " + std::to_string(input.cols()) +
                        " != weight rows " + std::to_string(weights.rows()));
  }
  return ad::add_row(ad::matmul(input, weights), bias);
}

}  // namespace radar::embed
