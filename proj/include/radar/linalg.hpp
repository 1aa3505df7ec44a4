#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace radar::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Normalized {
  Matrix values;
  double mean = 0.0;
  double std = 1.0;
};

/// Standardizes all entries (diagonal included) with the population standard
/// deviation. Throws DegenerateInput for a constant matrix.
Normalized zscore_normalize(const Matrix& d);

/// Affine map of the entries onto [0, 1]. Throws DegenerateInput if max == min.
Matrix minmax_normalize(const Matrix& d);

/// Rank-k factors d ~ u * diag(sigma) * v^T with sigma sorted descending.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  int rank() const { return static_cast<int>(sigma.size()); }
  Matrix reconstruct() const;
};

struct SvdOptions {
  int oversampling = 10;
  int power_iterations = 16;
};

/// Randomized truncated SVD (Gaussian range finder, QR-stabilized subspace
/// iteration, exact SVD of the projected block). Bit-reproducible for a fixed
/// seed. Throws InvalidRank unless 1 <= k <= min(rows, cols).
SvdFactors truncated_svd(const Matrix& d, int k, std::uint64_t seed, SvdOptions options = {});

/// Fraction of the squared Frobenius norm of d retained by the factors.
double energy_ratio(const SvdFactors& factors, const Matrix& d);

/// ||d - u diag(sigma) v^T||_F / ||d||_F.
double relative_residual(const SvdFactors& factors, const Matrix& d);

struct EigenPairs {
  Vector values;   // ordered by |value| descending
  Matrix vectors;  // matching unit columns
};

/// Top-k eigenpairs, by magnitude, of the symmetric part (d + d^T) / 2.
EigenPairs top_symmetric_eigenpairs(const Matrix& d, int k);

/// Single-factor spectral embedding Q_k |Lambda_k|^{1/2} of the symmetric part.
Matrix evd_embed(const Matrix& d, int k);

/// Double-centering matrix -1/2 J (d o d) J used by classical MDS.
Matrix double_centered_gram(const Matrix& d);

/// Classical MDS: spectral embedding of the double-centered squared distances.
Matrix mds_embed(const Matrix& d, int k);

/// [Q[:, :k] | R[:k, :]^T] from a QR factorization with nonnegative diag(R).
/// Width is 2k; the downstream projection mixes the two blocks.
Matrix qr_embed(const Matrix& d, int k);

}  // namespace radar::linalg
