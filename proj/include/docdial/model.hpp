#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docdial/tokenizer.hpp"

namespace docdial {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Configuration and parameters
// ---------------------------------------------------------------------------

struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_enc_layers = 2;
  int n_dec_layers = 2;
  int d_ff = 256;
  int vocab_size = 0;
  int max_positions = 512;
  double dropout_rate = 0.1;
  uint64_t init_seed = 1;

  int head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (d_model < 1 || n_heads < 1 || n_enc_layers < 1 || n_dec_layers < 1 || d_ff < 1 ||
        vocab_size < 1 || max_positions < 1) {
      throw std::invalid_argument("model config: all dimensions must be >= 1");
    }
    if (d_model % n_heads != 0) {
      throw std::invalid_argument("model config: d_model must be divisible by n_heads");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw std::invalid_argument("model config: dropout_rate must be in [0, 1)");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename Scalar>
struct LayerNormParams {
  VecX<Scalar> gamma, beta;
};

template <typename Scalar>
struct AttentionParams {
  MatX<Scalar> wq, wk, wv, wo;  // all (d_model, d_model), no biases
};

template <typename Scalar>
struct FeedForwardParams {
  MatX<Scalar> w1, w2;  // (d_model, d_ff), (d_ff, d_model)
  VecX<Scalar> b1, b2;
};

template <typename Scalar>
struct EncoderLayerParams {
  LayerNormParams<Scalar> ln_attn;
  AttentionParams<Scalar> attn;
  LayerNormParams<Scalar> ln_ffn;
  FeedForwardParams<Scalar> ffn;
};

template <typename Scalar>
struct DecoderLayerParams {
  LayerNormParams<Scalar> ln_self;
  AttentionParams<Scalar> self_attn;
  LayerNormParams<Scalar> ln_cross;
  AttentionParams<Scalar> cross_attn;
  LayerNormParams<Scalar> ln_ffn;
  FeedForwardParams<Scalar> ffn;
};

// Pre-norm encoder-decoder weights. The token embedding table doubles as the
// output projection.
template <typename Scalar>
struct ModelParams {
  MatX<Scalar> embedding;  // (vocab_size, d_model)
  MatX<Scalar> pos_enc;    // (max_positions, d_model)
  MatX<Scalar> pos_dec;    // (max_positions, d_model)
  std::vector<EncoderLayerParams<Scalar>> enc_layers;
  LayerNormParams<Scalar> enc_final_ln;
  std::vector<DecoderLayerParams<Scalar>> dec_layers;
  LayerNormParams<Scalar> dec_final_ln;
};

// ---------------------------------------------------------------------------
// Flat tensor registry: one fixed (name, data, shape) listing used by the
// optimizer, gradient checks and the checkpoint format.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct TensorView {
  std::string name;
  Scalar* data = nullptr;
  Eigen::Index rows = 0, cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

namespace detail {

template <typename Params, typename Fn>
void visit_params(Params& p, Fn&& fn) {
  fn("embedding", p.embedding);
  fn("pos_enc", p.pos_enc);
  fn("pos_dec", p.pos_dec);
  auto visit_ln = [&](const std::string& prefix, auto& ln) {
    fn(prefix + ".gamma", ln.gamma);
    fn(prefix + ".beta", ln.beta);
  };
  auto visit_attn = [&](const std::string& prefix, auto& a) {
    fn(prefix + ".wq", a.wq);
    fn(prefix + ".wk", a.wk);
    fn(prefix + ".wv", a.wv);
    fn(prefix + ".wo", a.wo);
  };
  auto visit_ffn = [&](const std::string& prefix, auto& f) {
    fn(prefix + ".w1", f.w1);
    fn(prefix + ".b1", f.b1);
    fn(prefix + ".w2", f.w2);
    fn(prefix + ".b2", f.b2);
  };
  for (size_t i = 0; i < p.enc_layers.size(); ++i) {
    const std::string base = "enc." + std::to_string(i);
    auto& l = p.enc_layers[i];
    visit_ln(base + ".ln_attn", l.ln_attn);
    visit_attn(base + ".attn", l.attn);
    visit_ln(base + ".ln_ffn", l.ln_ffn);
    visit_ffn(base + ".ffn", l.ffn);
  }
  visit_ln("enc.final_ln", p.enc_final_ln);
  for (size_t i = 0; i < p.dec_layers.size(); ++i) {
    const std::string base = "dec." + std::to_string(i);
    auto& l = p.dec_layers[i];
    visit_ln(base + ".ln_self", l.ln_self);
    visit_attn(base + ".self_attn", l.self_attn);
    visit_ln(base + ".ln_cross", l.ln_cross);
    visit_attn(base + ".cross_attn", l.cross_attn);
    visit_ln(base + ".ln_ffn", l.ln_ffn);
    visit_ffn(base + ".ffn", l.ffn);
  }
  visit_ln("dec.final_ln", p.dec_final_ln);
}

}  // namespace detail

template <typename Scalar>
std::vector<TensorView<Scalar>> tensor_views(ModelParams<Scalar>& p) {
  std::vector<TensorView<Scalar>> out;
  detail::visit_params(p, [&out](const std::string& name, auto& t) {
    out.push_back({name, t.data(), t.rows(), t.cols()});
  });
  return out;
}

template <typename Scalar>
std::vector<TensorView<const Scalar>> tensor_views(const ModelParams<Scalar>& p) {
  std::vector<TensorView<const Scalar>> out;
  detail::visit_params(p, [&out](const std::string& name, const auto& t) {
    out.push_back({name, t.data(), t.rows(), t.cols()});
  });
  return out;
}

template <typename Scalar>
int64_t parameter_count(const ModelParams<Scalar>& p) {
  int64_t n = 0;
  for (const auto& t : tensor_views(p)) n += t.size();
  return n;
}

// All-zero parameter set with the shapes implied by the config.
template <typename Scalar>
ModelParams<Scalar> zeros_like_config(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams<Scalar> p;
  const int d = cfg.d_model;
  auto ln = [&] {
    LayerNormParams<Scalar> l;
    l.gamma = VecX<Scalar>::Zero(d);
    l.beta = VecX<Scalar>::Zero(d);
    return l;
  };
  auto attn = [&] {
    AttentionParams<Scalar> a;
    a.wq = MatX<Scalar>::Zero(d, d);
    a.wk = MatX<Scalar>::Zero(d, d);
    a.wv = MatX<Scalar>::Zero(d, d);
    a.wo = MatX<Scalar>::Zero(d, d);
    return a;
  };
  auto ffn = [&] {
    FeedForwardParams<Scalar> f;
    f.w1 = MatX<Scalar>::Zero(d, cfg.d_ff);
    f.b1 = VecX<Scalar>::Zero(cfg.d_ff);
    f.w2 = MatX<Scalar>::Zero(cfg.d_ff, d);
    f.b2 = VecX<Scalar>::Zero(d);
    return f;
  };
  p.embedding = MatX<Scalar>::Zero(cfg.vocab_size, d);
  p.pos_enc = MatX<Scalar>::Zero(cfg.max_positions, d);
  p.pos_dec = MatX<Scalar>::Zero(cfg.max_positions, d);
  for (int i = 0; i < cfg.n_enc_layers; ++i) p.enc_layers.push_back({ln(), attn(), ln(), ffn()});
  p.enc_final_ln = ln();
  for (int i = 0; i < cfg.n_dec_layers; ++i) {
    p.dec_layers.push_back({ln(), attn(), ln(), attn(), ln(), ffn()});
  }
  p.dec_final_ln = ln();
  return p;
}

template <typename Scalar>
void set_zero(ModelParams<Scalar>& p) {
  for (auto& t : tensor_views(p)) {
    Eigen::Map<VecX<Scalar>>(t.data, t.size()).setZero();
  }
}

// Seeded scaled-normal initialization: std 0.02 for embeddings and input
// projections, residual-output projections (attention wo, ffn w2) downscaled
// by 1/sqrt(2 * total layers); LayerNorm gains are 1, all biases 0.
template <typename Scalar>
ModelParams<Scalar> init_model(const ModelConfig& cfg) {
  ModelParams<Scalar> p = zeros_like_config<Scalar>(cfg);
  std::mt19937_64 rng(cfg.init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double base_std = 0.02;
  const double resid_std = base_std / std::sqrt(2.0 * (cfg.n_enc_layers + cfg.n_dec_layers));

  auto fill = [&](MatX<Scalar>& m, double std) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<Scalar>(normal(rng) * std);
    }
  };
  auto fill_attn = [&](AttentionParams<Scalar>& a) {
    fill(a.wq, base_std);
    fill(a.wk, base_std);
    fill(a.wv, base_std);
    fill(a.wo, resid_std);
  };
  auto fill_ffn = [&](FeedForwardParams<Scalar>& f) {
    fill(f.w1, base_std);
    fill(f.w2, resid_std);
  };
  auto ones_ln = [](LayerNormParams<Scalar>& l) { l.gamma.setOnes(); };

  fill(p.embedding, base_std);
  fill(p.pos_enc, base_std);
  fill(p.pos_dec, base_std);
  for (auto& l : p.enc_layers) {
    ones_ln(l.ln_attn);
    fill_attn(l.attn);
    ones_ln(l.ln_ffn);
    fill_ffn(l.ffn);
  }
  ones_ln(p.enc_final_ln);
  for (auto& l : p.dec_layers) {
    ones_ln(l.ln_self);
    fill_attn(l.self_attn);
    ones_ln(l.ln_cross);
    fill_attn(l.cross_attn);
    ones_ln(l.ln_ffn);
    fill_ffn(l.ffn);
  }
  ones_ln(p.dec_final_ln);
  return p;
}

// ---------------------------------------------------------------------------
// Tempered softmax (cross-attention uses it with the scheduled tau; all other
// softmaxes are the tau = 1 case of the same code path)
// ---------------------------------------------------------------------------

// a_i = exp(z_i / tau) / sum_j exp(z_j / tau), computed max-subtracted.
template <typename Scalar>
VecX<Scalar> tempered_softmax(const VecX<Scalar>& z, Scalar tau) {
  if (!(tau > Scalar(0))) {
    throw std::invalid_argument("tempered_softmax: tau must be > 0");
  }
  if (!z.allFinite()) {
    throw std::invalid_argument("tempered_softmax: logits must be finite");
  }
  if (z.size() == 0) return z;
  VecX<Scalar> e = ((z.array() - z.maxCoeff()) / tau).exp().matrix();
  return e / e.sum();
}

namespace detail {

// Row-wise in-place softmax over scores that may contain -inf mask entries;
// every row must keep at least one finite entry.
template <typename Scalar>
void tempered_softmax_rows_inplace(MatX<Scalar>& scores, Scalar tau) {
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    const Scalar m = row.maxCoeff();
    row = ((row.array() - m) / tau).exp().matrix();
    row /= row.sum();
  }
}

// dS for P = softmax(S / tau): (P .* (dP - rowsum(dP .* P))) / tau.
template <typename Scalar>
MatX<Scalar> softmax_rows_backward(const MatX<Scalar>& probs, const MatX<Scalar>& dprobs,
                                   Scalar tau) {
  VecX<Scalar> row_dot = (probs.array() * dprobs.array()).rowwise().sum().matrix();
  MatX<Scalar> ds =
      (probs.array() * (dprobs.array().colwise() - row_dot.array())).matrix() / tau;
  return ds;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward pass with cached activations (consumed by backward())
// ---------------------------------------------------------------------------

// Attention probabilities a_i and the mixed per-head values they produce.
template <typename Scalar>
struct AttentionOutput {
  std::vector<MatX<Scalar>> weights;  // per head, (Lq x Lk), rows sum to 1
  MatX<Scalar> values;                // (Lq x d_model), pre-output-projection
};

template <typename Scalar>
struct AttentionCache {
  MatX<Scalar> q, k, v;  // packed heads
  AttentionOutput<Scalar> out;
};

template <typename Scalar>
struct LayerNormCache {
  MatX<Scalar> x_hat;
  VecX<Scalar> inv_std;
  MatX<Scalar> y;  // LN output, the branch input
};

template <typename Scalar>
struct FeedForwardCache {
  MatX<Scalar> u, a;  // pre- and post-GeLU
};

template <typename Scalar>
struct EncoderLayerCache {
  LayerNormCache<Scalar> ln_attn;
  AttentionCache<Scalar> attn;
  MatX<Scalar> drop_attn;
  LayerNormCache<Scalar> ln_ffn;
  FeedForwardCache<Scalar> ffn;
  MatX<Scalar> drop_ffn;
};

template <typename Scalar>
struct DecoderLayerCache {
  LayerNormCache<Scalar> ln_self;
  AttentionCache<Scalar> self_attn;
  MatX<Scalar> drop_self;
  LayerNormCache<Scalar> ln_cross;
  AttentionCache<Scalar> cross_attn;
  MatX<Scalar> drop_cross;
  LayerNormCache<Scalar> ln_ffn;
  FeedForwardCache<Scalar> ffn;
  MatX<Scalar> drop_ffn;
};

template <typename Scalar>
struct ForwardCache {
  TokenSeq input_ids, dec_input_ids;
  Scalar tau = 1;
  bool training = false;
  MatX<Scalar> emb_drop_enc, emb_drop_dec;
  std::vector<EncoderLayerCache<Scalar>> enc;
  LayerNormCache<Scalar> enc_final;
  MatX<Scalar> enc_out;
  std::vector<DecoderLayerCache<Scalar>> dec;
  LayerNormCache<Scalar> dec_final;
  MatX<Scalar> dec_out;
  MatX<Scalar> logits;  // (T x vocab_size)
};

namespace detail {

constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
void layernorm_forward(const LayerNormParams<Scalar>& w, const MatX<Scalar>& x,
                       LayerNormCache<Scalar>& c) {
  VecX<Scalar> mu = x.rowwise().mean();
  MatX<Scalar> xc = x.colwise() - mu;
  VecX<Scalar> var = xc.array().square().rowwise().mean().matrix();
  c.inv_std = (var.array() + Scalar(kLayerNormEps)).rsqrt().matrix();
  c.x_hat = (xc.array().colwise() * c.inv_std.array()).matrix();
  c.y = ((c.x_hat.array().rowwise() * w.gamma.transpose().array()).rowwise() +
         w.beta.transpose().array())
            .matrix();
}

// Adds the input gradient into dx; accumulates weight grads.
template <typename Scalar>
void layernorm_backward(const LayerNormParams<Scalar>& w, LayerNormParams<Scalar>& gw,
                        const LayerNormCache<Scalar>& c, const MatX<Scalar>& dy,
                        MatX<Scalar>& dx) {
  gw.gamma += (dy.array() * c.x_hat.array()).matrix().colwise().sum().transpose();
  gw.beta += dy.colwise().sum().transpose();
  MatX<Scalar> t = (dy.array().rowwise() * w.gamma.transpose().array()).matrix();
  VecX<Scalar> m1 = t.rowwise().mean();
  VecX<Scalar> m2 = (t.array() * c.x_hat.array()).rowwise().mean().matrix();
  dx.array() += ((t.array().colwise() - m1.array()) -
                 c.x_hat.array().colwise() * m2.array())
                    .colwise() *
                c.inv_std.array();
}

template <typename Scalar>
Scalar gelu_value(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
  const Scalar pdf = Scalar(0.3989422804014327) * std::exp(Scalar(-0.5) * x * x);
  return cdf + x * pdf;
}

template <typename Scalar>
MatX<Scalar> ffn_forward(const FeedForwardParams<Scalar>& w, const MatX<Scalar>& xn,
                         FeedForwardCache<Scalar>& c) {
  c.u = xn * w.w1;
  c.u.rowwise() += w.b1.transpose();
  c.a = c.u.unaryExpr([](Scalar v) { return gelu_value(v); });
  MatX<Scalar> f = c.a * w.w2;
  f.rowwise() += w.b2.transpose();
  return f;
}

template <typename Scalar>
void ffn_backward(const FeedForwardParams<Scalar>& w, FeedForwardParams<Scalar>& gw,
                  const MatX<Scalar>& xn, const FeedForwardCache<Scalar>& c,
                  const MatX<Scalar>& df, MatX<Scalar>& dxn) {
  gw.w2 += c.a.transpose() * df;
  gw.b2 += df.colwise().sum().transpose();
  MatX<Scalar> da = df * w.w2.transpose();
  MatX<Scalar> du =
      (da.array() * c.u.unaryExpr([](Scalar v) { return gelu_derivative(v); }).array())
          .matrix();
  gw.w1 += xn.transpose() * du;
  gw.b1 += du.colwise().sum().transpose();
  dxn += du * w.w1.transpose();
}

template <typename Scalar>
MatX<Scalar> attention_forward(const AttentionParams<Scalar>& w, const MatX<Scalar>& xq,
                               const MatX<Scalar>& xkv, bool causal, Scalar tau, int n_heads,
                               AttentionCache<Scalar>& c) {
  const int d = static_cast<int>(xq.cols());
  const int dk = d / n_heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();

  c.q.noalias() = xq * w.wq;
  c.k.noalias() = xkv * w.wk;
  c.v.noalias() = xkv * w.wv;
  c.out.weights.assign(n_heads, MatX<Scalar>());
  c.out.values.resize(xq.rows(), d);

  for (int h = 0; h < n_heads; ++h) {
    auto qh = c.q.middleCols(h * dk, dk);
    auto kh = c.k.middleCols(h * dk, dk);
    auto vh = c.v.middleCols(h * dk, dk);
    MatX<Scalar> s = (qh * kh.transpose()) * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < s.cols(); ++j) s(i, j) = neg_inf;
      }
    }
    tempered_softmax_rows_inplace(s, tau);
    c.out.values.middleCols(h * dk, dk).noalias() = s * vh;
    c.out.weights[h] = std::move(s);
  }
  return c.out.values * w.wo;
}

template <typename Scalar>
void attention_backward(const AttentionParams<Scalar>& w, AttentionParams<Scalar>& gw,
                        const MatX<Scalar>& xq, const MatX<Scalar>& xkv,
                        const AttentionCache<Scalar>& c, const MatX<Scalar>& dout, Scalar tau,
                        int n_heads, MatX<Scalar>& dxq, MatX<Scalar>& dxkv) {
  const int d = static_cast<int>(xq.cols());
  const int dk = d / n_heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));

  gw.wo += c.out.values.transpose() * dout;
  MatX<Scalar> dctx = dout * w.wo.transpose();
  MatX<Scalar> dq(c.q.rows(), d), dkm(c.k.rows(), d), dvm(c.v.rows(), d);

  for (int h = 0; h < n_heads; ++h) {
    auto qh = c.q.middleCols(h * dk, dk);
    auto kh = c.k.middleCols(h * dk, dk);
    auto vh = c.v.middleCols(h * dk, dk);
    const MatX<Scalar>& probs = c.out.weights[h];
    auto dch = dctx.middleCols(h * dk, dk);
    MatX<Scalar> dprobs = dch * vh.transpose();
    dvm.middleCols(h * dk, dk).noalias() = probs.transpose() * dch;
    MatX<Scalar> ds = softmax_rows_backward(probs, dprobs, tau);
    dq.middleCols(h * dk, dk).noalias() = (ds * kh) * scale;
    dkm.middleCols(h * dk, dk).noalias() = (ds.transpose() * qh) * scale;
  }
  gw.wq += xq.transpose() * dq;
  gw.wk += xkv.transpose() * dkm;
  gw.wv += xkv.transpose() * dvm;
  dxq.noalias() += dq * w.wq.transpose();
  dxkv.noalias() += dkm * w.wk.transpose();
  dxkv.noalias() += dvm * w.wv.transpose();
}

template <typename Scalar>
MatX<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                          std::mt19937& rng) {
  const Scalar keep_inv = Scalar(1.0 / (1.0 - rate));
  std::bernoulli_distribution keep(1.0 - rate);
  MatX<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = keep(rng) ? keep_inv : Scalar(0);
  }
  return m;
}

template <typename Scalar>
MatX<Scalar> embed(const MatX<Scalar>& table, const MatX<Scalar>& positions,
                   const TokenSeq& ids) {
  MatX<Scalar> x(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        table.row(ids[i]) + positions.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

template <typename Scalar>
void check_token_seq(const char* what, const TokenSeq& ids, const ModelConfig& cfg) {
  if (ids.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty token sequence");
  }
  if (static_cast<int>(ids.size()) > cfg.max_positions) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(ids.size()) +
                                " exceeds max_positions " + std::to_string(cfg.max_positions));
  }
  for (TokenId id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw std::invalid_argument(std::string(what) + ": token id " + std::to_string(id) +
                                  " outside vocabulary of size " +
                                  std::to_string(cfg.vocab_size));
    }
  }
}

}  // namespace detail

// Teacher-forced forward pass. Encoder and decoder self-attention always run
// at tau = 1; every decoder cross-attention runs at the supplied tau. Dropout
// fires only when training is set and an RNG is supplied.
template <typename Scalar>
ForwardCache<Scalar> forward(const ModelParams<Scalar>& p, const ModelConfig& cfg,
                             const TokenSeq& input_ids, const TokenSeq& dec_input_ids,
                             Scalar tau, bool training = false,
                             std::mt19937* dropout_rng = nullptr) {
  cfg.validate();
  if (!(tau > Scalar(0))) throw std::invalid_argument("forward: tau must be > 0");
  detail::check_token_seq("forward(input)", input_ids, cfg);
  detail::check_token_seq("forward(decoder input)", dec_input_ids, cfg);

  ForwardCache<Scalar> cache;
  cache.input_ids = input_ids;
  cache.dec_input_ids = dec_input_ids;
  cache.tau = tau;
  const bool use_dropout = training && dropout_rng != nullptr && cfg.dropout_rate > 0.0;
  cache.training = use_dropout;
  const Scalar one = 1;

  auto maybe_mask = [&](MatX<Scalar>& target, Eigen::Index rows, Eigen::Index cols) {
    if (use_dropout) {
      target = detail::dropout_mask<Scalar>(rows, cols, cfg.dropout_rate, *dropout_rng);
    }
  };
  auto apply = [&](MatX<Scalar>& x, const MatX<Scalar>& mask) {
    if (use_dropout) x.array() *= mask.array();
  };

  // Encoder
  MatX<Scalar> x = detail::embed(p.embedding, p.pos_enc, input_ids);
  maybe_mask(cache.emb_drop_enc, x.rows(), x.cols());
  apply(x, cache.emb_drop_enc);
  cache.enc.resize(cfg.n_enc_layers);
  for (int l = 0; l < cfg.n_enc_layers; ++l) {
    auto& lc = cache.enc[l];
    const auto& lw = p.enc_layers[l];
    detail::layernorm_forward(lw.ln_attn, x, lc.ln_attn);
    MatX<Scalar> branch = detail::attention_forward(lw.attn, lc.ln_attn.y, lc.ln_attn.y,
                                                    /*causal=*/false, one, cfg.n_heads, lc.attn);
    maybe_mask(lc.drop_attn, branch.rows(), branch.cols());
    apply(branch, lc.drop_attn);
    x += branch;
    detail::layernorm_forward(lw.ln_ffn, x, lc.ln_ffn);
    branch = detail::ffn_forward(lw.ffn, lc.ln_ffn.y, lc.ffn);
    maybe_mask(lc.drop_ffn, branch.rows(), branch.cols());
    apply(branch, lc.drop_ffn);
    x += branch;
  }
  detail::layernorm_forward(p.enc_final_ln, x, cache.enc_final);
  cache.enc_out = cache.enc_final.y;

  // Decoder
  MatX<Scalar> y = detail::embed(p.embedding, p.pos_dec, dec_input_ids);
  maybe_mask(cache.emb_drop_dec, y.rows(), y.cols());
  apply(y, cache.emb_drop_dec);
  cache.dec.resize(cfg.n_dec_layers);
  for (int l = 0; l < cfg.n_dec_layers; ++l) {
    auto& lc = cache.dec[l];
    const auto& lw = p.dec_layers[l];
    detail::layernorm_forward(lw.ln_self, y, lc.ln_self);
    MatX<Scalar> branch =
        detail::attention_forward(lw.self_attn, lc.ln_self.y, lc.ln_self.y,
                                  /*causal=*/true, one, cfg.n_heads, lc.self_attn);
    maybe_mask(lc.drop_self, branch.rows(), branch.cols());
    apply(branch, lc.drop_self);
    y += branch;

    detail::layernorm_forward(lw.ln_cross, y, lc.ln_cross);
    branch = detail::attention_forward(lw.cross_attn, lc.ln_cross.y, cache.enc_out,
                                       /*causal=*/false, tau, cfg.n_heads, lc.cross_attn);
    maybe_mask(lc.drop_cross, branch.rows(), branch.cols());
    apply(branch, lc.drop_cross);
    y += branch;

    detail::layernorm_forward(lw.ln_ffn, y, lc.ln_ffn);
    branch = detail::ffn_forward(lw.ffn, lc.ln_ffn.y, lc.ffn);
    maybe_mask(lc.drop_ffn, branch.rows(), branch.cols());
    apply(branch, lc.drop_ffn);
    y += branch;
  }
  detail::layernorm_forward(p.dec_final_ln, y, cache.dec_final);
  cache.dec_out = cache.dec_final.y;
  cache.logits.noalias() = cache.dec_out * p.embedding.transpose();
  return cache;
}

// Reverse-mode gradients of the full forward graph; accumulates into `grads`
// (callers zero it first, or keep accumulating across a batch).
template <typename Scalar>
void backward(const ModelParams<Scalar>& p, const ModelConfig& cfg,
              const ForwardCache<Scalar>& cache, const MatX<Scalar>& dlogits,
              ModelParams<Scalar>& grads) {
  const bool use_dropout = cache.training;
  auto dropped = [&](const MatX<Scalar>& dy, const MatX<Scalar>& mask) -> MatX<Scalar> {
    if (!use_dropout) return dy;
    return (dy.array() * mask.array()).matrix();
  };

  // Output projection (tied with the embedding table)
  grads.embedding.noalias() += dlogits.transpose() * cache.dec_out;
  MatX<Scalar> d_dec_out = dlogits * p.embedding;

  // Decoder stack
  MatX<Scalar> dy = MatX<Scalar>::Zero(d_dec_out.rows(), d_dec_out.cols());
  detail::layernorm_backward(p.dec_final_ln, grads.dec_final_ln, cache.dec_final, d_dec_out, dy);
  MatX<Scalar> d_enc_out = MatX<Scalar>::Zero(cache.enc_out.rows(), cache.enc_out.cols());
  for (int l = cfg.n_dec_layers - 1; l >= 0; --l) {
    const auto& lc = cache.dec[l];
    const auto& lw = p.dec_layers[l];
    auto& gl = grads.dec_layers[l];

    MatX<Scalar> dbranch = dropped(dy, lc.drop_ffn);
    MatX<Scalar> dxn = MatX<Scalar>::Zero(dy.rows(), dy.cols());
    detail::ffn_backward(lw.ffn, gl.ffn, lc.ln_ffn.y, lc.ffn, dbranch, dxn);
    detail::layernorm_backward(lw.ln_ffn, gl.ln_ffn, lc.ln_ffn, dxn, dy);

    dbranch = dropped(dy, lc.drop_cross);
    dxn.setZero();
    detail::attention_backward(lw.cross_attn, gl.cross_attn, lc.ln_cross.y, cache.enc_out,
                               lc.cross_attn, dbranch, cache.tau, cfg.n_heads, dxn, d_enc_out);
    detail::layernorm_backward(lw.ln_cross, gl.ln_cross, lc.ln_cross, dxn, dy);

    dbranch = dropped(dy, lc.drop_self);
    dxn.setZero();
    detail::attention_backward(lw.self_attn, gl.self_attn, lc.ln_self.y, lc.ln_self.y,
                               lc.self_attn, dbranch, Scalar(1), cfg.n_heads, dxn, dxn);
    detail::layernorm_backward(lw.ln_self, gl.ln_self, lc.ln_self, dxn, dy);
  }
  if (use_dropout) dy.array() *= cache.emb_drop_dec.array();
  for (size_t t = 0; t < cache.dec_input_ids.size(); ++t) {
    grads.embedding.row(cache.dec_input_ids[t]) += dy.row(static_cast<Eigen::Index>(t));
    grads.pos_dec.row(static_cast<Eigen::Index>(t)) += dy.row(static_cast<Eigen::Index>(t));
  }

  // Encoder stack (fed by the cross-attention key/value gradients)
  MatX<Scalar> dx = MatX<Scalar>::Zero(d_enc_out.rows(), d_enc_out.cols());
  detail::layernorm_backward(p.enc_final_ln, grads.enc_final_ln, cache.enc_final, d_enc_out, dx);
  for (int l = cfg.n_enc_layers - 1; l >= 0; --l) {
    const auto& lc = cache.enc[l];
    const auto& lw = p.enc_layers[l];
    auto& gl = grads.enc_layers[l];

    MatX<Scalar> dbranch = dropped(dx, lc.drop_ffn);
    MatX<Scalar> dxn = MatX<Scalar>::Zero(dx.rows(), dx.cols());
    detail::ffn_backward(lw.ffn, gl.ffn, lc.ln_ffn.y, lc.ffn, dbranch, dxn);
    detail::layernorm_backward(lw.ln_ffn, gl.ln_ffn, lc.ln_ffn, dxn, dx);

    dbranch = dropped(dx, lc.drop_attn);
    dxn.setZero();
    detail::attention_backward(lw.attn, gl.attn, lc.ln_attn.y, lc.ln_attn.y, lc.attn, dbranch,
                               Scalar(1), cfg.n_heads, dxn, dxn);
    detail::layernorm_backward(lw.ln_attn, gl.ln_attn, lc.ln_attn, dxn, dx);
  }
  if (use_dropout) dx.array() *= cache.emb_drop_enc.array();
  for (size_t t = 0; t < cache.input_ids.size(); ++t) {
    grads.embedding.row(cache.input_ids[t]) += dx.row(static_cast<Eigen::Index>(t));
    grads.pos_enc.row(static_cast<Eigen::Index>(t)) += dx.row(static_cast<Eigen::Index>(t));
  }
}

}  // namespace docdial
