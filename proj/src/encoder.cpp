#include "radar/encoder.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "radar/error.hpp"

namespace radar::encoder {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string_view to_string(AttnNorm a) { return a == AttnNorm::Sinkhorn ? "sinkhorn" : "softmax"; }

AttnNorm parse_attn_norm(std::string_view text) {
  if (text == "sinkhorn") return AttnNorm::Sinkhorn;
  if (text == "softmax") return AttnNorm::Softmax;
  throw ConfigError("unknown attention normalization '" + std::string(text) + "'");
}

std::string_view to_string(NormKind k) { return k == NormKind::Instance ? "instance" : "layer"; }

NormKind parse_norm_kind(std::string_view text) {
  if (text == "instance") return NormKind::Instance;
  if (text == "layer") return NormKind::Layer;
  throw ConfigError("unknown norm kind '" + std::string(text) + "'");
}

void EncoderConfig::validate() const {
  if (model_dim < 1 || n_heads < 1 || model_dim % n_heads != 0) {
    throw ConfigError("model_dim must be a positive multiple of n_heads");
  }
  if (n_layers < 0 || ffn_dim < 1 || fusion_hidden < 1) {
    throw ConfigError("encoder widths must be positive");
  }
  if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be >= 1");
}

namespace {

// Divides every column by its sum; returns false if a sum is zero.
bool normalize_columns(Matrix& p) {
  const Eigen::RowVectorXd sums = p.colwise().sum();
  if ((sums.array() <= 0.0).any() || !sums.allFinite()) return false;
  p.array().rowwise() /= sums.array();
  return true;
}

bool normalize_rows(Matrix& p) {
  const Eigen::VectorXd sums = p.rowwise().sum();
  if ((sums.array() <= 0.0).any() || !sums.allFinite()) return false;
  p.array().colwise() /= sums.array();
  return true;
}

// All intermediate iterates: [exp(S - max), after col 1, after row 1, ...].
std::vector<Matrix> sinkhorn_states(const Matrix& scores, int iters) {
  if (iters < 1) throw ConfigError("sinkhorn: iters must be >= 1");
  if (!scores.allFinite()) throw NumericalUnderflow("sinkhorn: non-finite scores");
  std::vector<Matrix> states;
  states.reserve(static_cast<std::size_t>(2 * iters + 1));
  states.push_back((scores.array() - scores.maxCoeff()).exp().matrix());
  for (int t = 0; t < iters; ++t) {
    Matrix p = states.back();
    if (!normalize_columns(p)) throw NumericalUnderflow("sinkhorn: column sum underflow");
    states.push_back(p);
    if (!normalize_rows(p)) throw NumericalUnderflow("sinkhorn: row sum underflow");
    states.push_back(std::move(p));
  }
  return states;
}

// Hidden unit u of the fusion map for one head, evaluated on every (i, j).
Eigen::ArrayXXd fusion_pre_activation(const Tensor& w1, const Tensor& b1, const Tensor& dot,
                                      const Matrix& d, const Matrix& dt, int head,
                                      Eigen::Index hidden, Eigen::Index u) {
  return w1(head, u) * dot.array() + w1(head, hidden + u) * d.array() +
         w1(head, 2 * hidden + u) * dt.array() + b1(head, u);
}

}  // namespace

Matrix sinkhorn(const Matrix& scores, int iters) {
  return sinkhorn_states(scores, iters).back();
}

Var sinkhorn(Var scores, int iters) {
  auto states = std::make_shared<std::vector<Matrix>>(sinkhorn_states(scores.value(), iters));
  Tensor out = states->back();
  return scores.tape()->record(
      std::move(out), {scores}, [scores, states](Tape& t, const Tensor&, const Tensor& g_out) {
        const auto& st = *states;
        Tensor g = g_out;
        for (std::size_t s = st.size() - 1; s >= 1; --s) {
          const Matrix& y = st[s];
          const Matrix& x = st[s - 1];
          // Odd states follow a column step, even states a row step.
          if (s % 2 == 0) {
            const Eigen::VectorXd sums = x.rowwise().sum();
            const Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
            g = (g.colwise() - inner).array().colwise() / sums.array();
          } else {
            const Eigen::RowVectorXd sums = x.colwise().sum();
            const Eigen::RowVectorXd inner = g.cwiseProduct(y).colwise().sum();
            g = (g.rowwise() - inner).array().rowwise() / sums.array();
          }
        }
        t.grad(scores) += g.cwiseProduct(st.front());
      });
}

double column_imbalance(std::span<const Matrix> heads) {
  double worst = 0.0;
  for (const auto& a : heads) {
    const Eigen::RowVectorXd cols = a.colwise().sum();
    worst = std::max(worst, cols.maxCoeff() - cols.minCoeff());
  }
  return worst;
}

Var fused_scores(Var dot, const Matrix& d, const Matrix& dt, const FusionVars& fusion, int head) {
  const Eigen::Index hidden = fusion.w2.cols();
  if (fusion.w1.cols() != 3 * hidden || fusion.b1.cols() != hidden || fusion.b2.cols() != 1) {
    throw WidthMismatch("fused_scores: fusion weight shapes");
  }
  if (dot.rows() != d.rows() || dot.cols() != d.cols() || d.rows() != dt.rows() ||
      d.cols() != dt.cols()) {
    throw WidthMismatch("fused_scores: score/distance shape mismatch");
  }
  const Tensor& w1 = fusion.w1.value();
  const Tensor& b1 = fusion.b1.value();
  const Tensor& w2 = fusion.w2.value();
  const Tensor& b2 = fusion.b2.value();
  const Tensor& x = dot.value();

  Tensor out = Tensor::Constant(x.rows(), x.cols(), b2(head, 0));
  for (Eigen::Index u = 0; u < hidden; ++u) {
    out.array() += w2(head, u) * fusion_pre_activation(w1, b1, x, d, dt, head, hidden, u).max(0.0);
  }

  const FusionVars f = fusion;
  return dot.tape()->record(
      std::move(out), {dot, f.w1, f.b1, f.w2, f.b2},
      [dot, f, d, dt, head, hidden](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& w1v = t.value(f.w1);
        const Tensor& b1v = t.value(f.b1);
        const Tensor& w2v = t.value(f.w2);
        const Tensor& xv = t.value(dot);
        const bool need_dot = t.requires_grad(dot);
        Tensor gdot = need_dot ? Tensor::Zero(xv.rows(), xv.cols()) : Tensor();
        for (Eigen::Index u = 0; u < hidden; ++u) {
          const Eigen::ArrayXXd z = fusion_pre_activation(w1v, b1v, xv, d, dt, head, hidden, u);
          const Eigen::ArrayXXd active = (z > 0.0).cast<double>();
          if (t.requires_grad(f.w2)) t.grad(f.w2)(head, u) += (g.array() * z.max(0.0)).sum();
          const Eigen::ArrayXXd dz = g.array() * w2v(head, u) * active;
          if (t.requires_grad(f.w1)) {
            Tensor& gw1 = t.grad(f.w1);
            gw1(head, u) += (dz * xv.array()).sum();
            gw1(head, hidden + u) += (dz * d.array()).sum();
            gw1(head, 2 * hidden + u) += (dz * dt.array()).sum();
          }
          if (t.requires_grad(f.b1)) t.grad(f.b1)(head, u) += dz.sum();
          if (need_dot) gdot.array() += w1v(head, u) * dz;
        }
        if (t.requires_grad(f.b2)) t.grad(f.b2)(head, 0) += g.sum();
        if (need_dot) t.grad(dot) += gdot;
      });
}

std::vector<LayerSlots> register_encoder(ParamSet& params, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const int dim = cfg.model_dim;
  const int heads = cfg.n_heads;
  const int hidden = cfg.fusion_hidden;
  std::vector<LayerSlots> layers;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    LayerSlots s{};
    s.wq = params.add_uniform(p + "wq", dim, dim, dim, rng);
    s.bq = params.add_uniform(p + "bq", 1, dim, dim, rng);
    s.wk = params.add_uniform(p + "wk", dim, dim, dim, rng);
    s.bk = params.add_uniform(p + "bk", 1, dim, dim, rng);
    s.wv = params.add_uniform(p + "wv", dim, dim, dim, rng);
    s.wo = params.add_uniform(p + "wo", dim, dim, dim, rng);
    s.bo = params.add_uniform(p + "bo", 1, dim, dim, rng);
    s.fuse_w1 = params.add_uniform(p + "fuse_w1", heads, 3 * hidden, 3, rng);
    s.fuse_b1 = params.add_uniform(p + "fuse_b1", heads, hidden, 3, rng);
    s.fuse_w2 = params.add_uniform(p + "fuse_w2", heads, hidden, hidden, rng);
    s.fuse_b2 = params.add_uniform(p + "fuse_b2", heads, 1, hidden, rng);
    s.norm1_gamma = params.add_constant(p + "norm1_gamma", 1, dim, 1.0);
    s.norm1_beta = params.add_constant(p + "norm1_beta", 1, dim, 0.0);
    s.ffn_w1 = params.add_uniform(p + "ffn_w1", dim, cfg.ffn_dim, dim, rng);
    s.ffn_b1 = params.add_uniform(p + "ffn_b1", 1, cfg.ffn_dim, dim, rng);
    s.ffn_w2 = params.add_uniform(p + "ffn_w2", cfg.ffn_dim, dim, cfg.ffn_dim, rng);
    s.ffn_b2 = params.add_uniform(p + "ffn_b2", 1, dim, cfg.ffn_dim, rng);
    s.norm2_gamma = params.add_constant(p + "norm2_gamma", 1, dim, 1.0);
    s.norm2_beta = params.add_constant(p + "norm2_beta", 1, dim, 0.0);
    layers.push_back(s);
  }
  return layers;
}

Var attention_aggregate(std::span<const Var> attention, Var values, Var wo, Var bo) {
  const auto heads = static_cast<Eigen::Index>(attention.size());
  if (heads == 0 || values.cols() % heads != 0) {
    throw WidthMismatch("attention_aggregate: value width not divisible by head count");
  }
  const Eigen::Index head_dim = values.cols() / heads;
  std::vector<Var> outs;
  outs.reserve(attention.size());
  for (Eigen::Index h = 0; h < heads; ++h) {
    const Var& a = attention[h];
    if (a.cols() != values.rows()) throw WidthMismatch("attention_aggregate: node count");
    outs.push_back(ad::matmul(a, ad::slice_cols(values, h * head_dim, head_dim)));
  }
  const Var joined = heads == 1 ? outs.front() : ad::concat_cols(outs);
  return ad::add_row(ad::matmul(joined, wo), bo);
}

namespace {

Var norm(Var x, Var gamma, Var beta, NormKind kind) {
  return kind == NormKind::Instance ? ad::instance_norm(x, gamma, beta)
                                    : ad::layer_norm(x, gamma, beta);
}

}  // namespace

Var encoder_layer(Var x, const Matrix& d, const Matrix& dt, const LayerSlots& s,
                  const EncoderConfig& cfg, const ParamSet& params,
                  AttentionTensor* attention_out) {
  if (x.cols() != cfg.model_dim) {
    throw WidthMismatch("encoder_layer: input width " + std::to_string(x.cols()) +
                        " != model_dim " + std::to_string(cfg.model_dim));
  }
  Tape& t = *x.tape();
  auto bind = [&](int slot) { return params.bind(t, slot); };

  const Var q = ad::add_row(ad::matmul(x, bind(s.wq)), bind(s.bq));
  const Var k = ad::add_row(ad::matmul(x, bind(s.wk)), bind(s.bk));
  const Var v = ad::matmul(x, bind(s.wv));
  const FusionVars fusion{bind(s.fuse_w1), bind(s.fuse_b1), bind(s.fuse_w2), bind(s.fuse_b2)};

  const int dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> attention;
  attention.reserve(static_cast<std::size_t>(cfg.n_heads));
  for (int h = 0; h < cfg.n_heads; ++h) {
    const Var dot = ad::scale(ad::matmul_nt(ad::slice_cols(q, h * dh, dh),
                                            ad::slice_cols(k, h * dh, dh)),
                              inv_sqrt);
    const Var scores = fused_scores(dot, d, dt, fusion, h);
    attention.push_back(cfg.attn_norm == AttnNorm::Sinkhorn
                            ? sinkhorn(scores, cfg.sinkhorn_iters)
                            : ad::softmax_rows(scores));
    if (attention_out) attention_out->push_back(attention.back().value());
  }
  const Var mha = attention_aggregate(attention, v, bind(s.wo), bind(s.bo));
  const Var x1 = norm(ad::add(x, mha), bind(s.norm1_gamma), bind(s.norm1_beta), cfg.norm_kind);

  const Var hidden = ad::relu(ad::add_row(ad::matmul(x1, bind(s.ffn_w1)), bind(s.ffn_b1)));
  const Var ffn = ad::add_row(ad::matmul(hidden, bind(s.ffn_w2)), bind(s.ffn_b2));
  return norm(ad::add(x1, ffn), bind(s.norm2_gamma), bind(s.norm2_beta), cfg.norm_kind);
}

EncodeOutput encode(Var x, const Matrix& d, std::span<const LayerSlots> layers,
                    const EncoderConfig& cfg, const ParamSet& params, bool keep_attention) {
  const Matrix dt = d.transpose();
  EncodeOutput out;
  Var h = x;
  for (const auto& slots : layers) {
    AttentionTensor attn;
    h = encoder_layer(h, d, dt, slots, cfg, params, keep_attention ? &attn : nullptr);
    out.layers.push_back(h);
    if (keep_attention) out.attention.push_back(std::move(attn));
  }
  out.final = h;
  return out;
}

}  // namespace radar::encoder
