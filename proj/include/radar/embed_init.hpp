#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "radar/linalg.hpp"
#include "radar/tape.hpp"

namespace radar::embed {

using linalg::Matrix;

enum class InitVariant { Svd, Random, OneHot, Knn, Evd, Mds, Qr };

std::string_view to_string(InitVariant v);
InitVariant parse_init_variant(std::string_view text);

struct InitScheme {
  InitVariant variant = InitVariant::Svd;
  int rank_k = 10;         // SVD / EVD / MDS / QR
  int knn_k = 10;          // KNN
  int one_hot_width = 64;  // ONE_HOT
};

/// Width of the distance-feature block a scheme produces; fixed for every n so
/// one projection serves all instance sizes.
int feature_width(const InitScheme& scheme);

struct SvdFeatures {
  Matrix features;              // n x 2k, [U sqrt(S) | V sqrt(S)]
  linalg::SvdFactors factors;
  Matrix normalized;            // z-scored input the factors approximate
};

/// Z-scores d, factorizes it at rank k, and splits sqrt(sigma) between the
/// left (outgoing) and right (incoming) singular vectors.
SvdFeatures svd_features(const Matrix& d, int k, std::uint64_t seed);

/// ||X W1 (X W2)^T - D||_F / ||D||_F with the canonical block selectors
/// W1 = [I_k | 0]^T and W2 = [0 | I_k]^T.
double asymmetry_aware_residual(const Matrix& x, const Matrix& d_normalized, int k);

/// Row i is e_i padded to `width`. Throws SizeExceedsWidth when n > width.
Matrix one_hot_features(int n, int width);

/// One Uniform[0, 1) scalar per node.
Matrix random_features(int n, std::uint64_t seed);

/// Row i holds the knn_k smallest outgoing distances d(i, j), j != i,
/// ascending; equal distances keep column order.
Matrix knn_features(const Matrix& d, int knn_k);

/// Features for `scheme` padded with zero columns to feature_width(scheme), so
/// instances smaller than the configured rank still fit the projection.
Matrix distance_features(const InitScheme& scheme, const Matrix& raw_d, std::uint64_t seed);

/// Affine map [x | node_features] * weights + bias; node_features may be empty.
ad::Var project_features(ad::Var x, std::optional<ad::Var> node_features, ad::Var weights,
                         ad::Var bias);

}  // namespace radar::embed
