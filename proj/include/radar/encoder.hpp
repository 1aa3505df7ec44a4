#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "radar/linalg.hpp"
#include "radar/params.hpp"
#include "radar/tape.hpp"

namespace radar::encoder {

using linalg::Matrix;

enum class AttnNorm { Sinkhorn, Softmax };
enum class NormKind { Instance, Layer };

std::string_view to_string(AttnNorm a);
AttnNorm parse_attn_norm(std::string_view text);
std::string_view to_string(NormKind k);
NormKind parse_norm_kind(std::string_view text);

struct EncoderConfig {
  int model_dim = 64;
  int n_heads = 8;
  int n_layers = 3;
  int ffn_dim = 128;
  int fusion_hidden = 16;
  AttnNorm attn_norm = AttnNorm::Sinkhorn;
  int sinkhorn_iters = 10;
  NormKind norm_kind = NormKind::Instance;

  int head_dim() const { return model_dim / n_heads; }
  /// Throws ConfigError on inconsistent widths.
  void validate() const;
};

/// exp(S - max S), then `iters` rounds of column then row normalization.
/// Rows of the result sum to one. Throws NumericalUnderflow if a row or
/// column sum reaches zero.
Matrix sinkhorn(const Matrix& scores, int iters);

/// Differentiable Sinkhorn; the backward pass unrolls every iteration.
ad::Var sinkhorn(ad::Var scores, int iters);

/// Max over heads of (largest column sum - smallest column sum).
double column_imbalance(std::span<const Matrix> heads);

// Per-layer fusion weights, one row per head:
//   w1: heads x (3 * hidden), column c * hidden + u is input channel c
//       (0: scaled dot product, 1: D, 2: D^T) into hidden unit u
//   b1: heads x hidden, w2: heads x hidden, b2: heads x 1
struct FusionVars {
  ad::Var w1, b1, w2, b2;
};

/// s[i][j] = w2 . relu(w1 [dot_ij, D_ij, D^T_ij] + b1) + b2 for one head.
ad::Var fused_scores(ad::Var dot, const Matrix& d, const Matrix& dt, const FusionVars& fusion,
                     int head);

struct LayerSlots {
  int wq, bq, wk, bk, wv, wo, bo;
  int fuse_w1, fuse_b1, fuse_w2, fuse_b2;
  int norm1_gamma, norm1_beta;
  int ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  int norm2_gamma, norm2_beta;
};

/// Registers the parameters of every layer as "enc.<layer>.<name>".
std::vector<LayerSlots> register_encoder(ParamSet& params, const EncoderConfig& cfg, Rng& rng);

/// Per-head weighted sums a_h * v_h, concatenated and projected by (wo, bo).
ad::Var attention_aggregate(std::span<const ad::Var> attention, ad::Var values, ad::Var wo,
                            ad::Var bo);

/// Attention weights of one layer, one n x n matrix per head.
using AttentionTensor = std::vector<Matrix>;

/// x <- Norm(x + MHA(x, d)); x <- Norm(x + FFN(x)).
ad::Var encoder_layer(ad::Var x, const Matrix& d, const Matrix& dt, const LayerSlots& slots,
                      const EncoderConfig& cfg, const ParamSet& params,
                      AttentionTensor* attention_out = nullptr);

struct EncodeOutput {
  ad::Var final;
  std::vector<ad::Var> layers;                // output of every layer
  std::vector<AttentionTensor> attention;     // filled when requested
};

EncodeOutput encode(ad::Var x, const Matrix& d, std::span<const LayerSlots> layers,
                    const EncoderConfig& cfg, const ParamSet& params,
                    bool keep_attention = false);

}  // namespace radar::encoder
