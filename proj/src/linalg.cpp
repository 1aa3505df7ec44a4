#include "radar/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "radar/error.hpp"
#include "radar/rng.hpp"

namespace radar::linalg {

namespace {

void require_rank(int k, Eigen::Index limit, const char* who) {
  if (k < 1 || k > limit) {
    throw InvalidRank(std::string(who) + ": k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(limit) + "]");
  }
}

void require_square(const Matrix& d, const char* who) {
  if (d.rows() != d.cols()) {
    throw WidthMismatch(std::string(who) + ": matrix must be square");
  }
}

Matrix thin_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

Matrix scale_columns_by_root(const Matrix& vectors, const Vector& values) {
  Matrix out = vectors;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) *= std::sqrt(std::abs(values(j)));
  }
  return out;
}

}  // namespace

Normalized zscore_normalize(const Matrix& d) {
  if (d.size() == 0) throw DegenerateInput("zscore_normalize: empty matrix");
  if (!d.allFinite()) throw DegenerateInput("zscore_normalize: non-finite entry");
  const double count = static_cast<double>(d.size());
  const double mean = d.sum() / count;
  const double var = (d.array() - mean).square().sum() / count;
  const double std = std::sqrt(var);
  if (std < 1e-12) throw DegenerateInput("zscore_normalize: zero variance");
  return {((d.array() - mean) / std).matrix(), mean, std};
}

Matrix minmax_normalize(const Matrix& d) {
  if (d.size() == 0) throw DegenerateInput("minmax_normalize: empty matrix");
  const double lo = d.minCoeff();
  const double hi = d.maxCoeff();
  if (!(hi > lo)) throw DegenerateInput("minmax_normalize: max == min");
  return ((d.array() - lo) / (hi - lo)).matrix();
}

Matrix SvdFactors::reconstruct() const {
  return u * sigma.asDiagonal() * v.transpose();
}

SvdFactors truncated_svd(const Matrix& d, int k, std::uint64_t seed, SvdOptions options) {
  const Eigen::Index limit = std::min(d.rows(), d.cols());
  require_rank(k, limit, "truncated_svd");
  const Eigen::Index width = std::min<Eigen::Index>(k + options.oversampling, limit);

  Rng rng(seed);
  Matrix omega(d.cols(), width);
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i < d.cols(); ++i) omega(i, j) = standard_normal(rng);
  }

  Matrix q = thin_q(d * omega);
  for (int it = 0; it < options.power_iterations; ++it) {
    const Matrix z = thin_q(d.transpose() * q);
    q = thin_q(d * z);
  }

  const Matrix b = q.transpose() * d;
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors out;
  out.u = (q * svd.matrixU()).leftCols(k);
  out.sigma = svd.singularValues().head(k);
  out.v = svd.matrixV().leftCols(k);
  return out;
}

double energy_ratio(const SvdFactors& factors, const Matrix& d) {
  const double total = d.squaredNorm();
  if (total <= 0.0) throw DegenerateInput("energy_ratio: zero matrix");
  return std::min(1.0, factors.sigma.squaredNorm() / total);
}

double relative_residual(const SvdFactors& factors, const Matrix& d) {
  const double norm = d.norm();
  if (norm <= 0.0) throw DegenerateInput("relative_residual: zero matrix");
  return (d - factors.reconstruct()).norm() / norm;
}

EigenPairs top_symmetric_eigenpairs(const Matrix& d, int k) {
  require_square(d, "top_symmetric_eigenpairs");
  require_rank(k, d.rows(), "top_symmetric_eigenpairs");
  const Matrix sym = 0.5 * (d + d.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& values = eig.eigenvalues();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values(a)) > std::abs(values(b));
  });

  EigenPairs out{Vector(k), Matrix(d.rows(), k)};
  for (int j = 0; j < k; ++j) {
    out.values(j) = values(order[j]);
    out.vectors.col(j) = eig.eigenvectors().col(order[j]);
  }
  return out;
}

Matrix evd_embed(const Matrix& d, int k) {
  const EigenPairs pairs = top_symmetric_eigenpairs(d, k);
  return scale_columns_by_root(pairs.vectors, pairs.values);
}

Matrix double_centered_gram(const Matrix& d) {
  require_square(d, "double_centered_gram");
  const Eigen::Index n = d.rows();
  const Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix squared = d.array().square().matrix();
  return -0.5 * j * squared * j;
}

Matrix mds_embed(const Matrix& d, int k) {
  require_square(d, "mds_embed");
  require_rank(k, d.rows(), "mds_embed");
  return evd_embed(double_centered_gram(d), k);
}

Matrix qr_embed(const Matrix& d, int k) {
  require_square(d, "qr_embed");
  require_rank(k, d.rows(), "qr_embed");
  const Eigen::Index n = d.rows();
  Eigen::HouseholderQR<Matrix> qr(d);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) *= -1.0;
      r.row(i) *= -1.0;
    }
  }
  Matrix out(n, 2 * k);
  out.leftCols(k) = q.leftCols(k);
  out.rightCols(k) = r.topRows(k).transpose();
  return out;
}

}  // namespace radar::linalg
