#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "docdial/model.hpp"
#include "docdial/schedule.hpp"
#include "docdial/taskbuilder.hpp"

namespace docdial {

struct TrainConfig {
  int epochs = 5;
  int batch_size = 8;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip_norm = 1.0;
  ScheduleSpec schedule;  // total_steps is filled in by train()
  uint64_t shuffle_seed = 1;
  std::string label = "run";

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
      throw std::invalid_argument("train config: betas must lie in (0, 1)");
    }
    if (!(grad_clip_norm > 0.0)) {
      throw std::invalid_argument("train config: grad_clip_norm must be > 0");
    }
  }
};

// ---------------------------------------------------------------------------
// Sequence loss (teacher-forced mean negative log-likelihood)
// ---------------------------------------------------------------------------

inline TokenSeq decoder_input_for(const TokenSeq& target_ids) {
  TokenSeq in;
  in.reserve(target_ids.size());
  in.push_back(Vocabulary::kPad);  // decoder start symbol
  in.insert(in.end(), target_ids.begin(), target_ids.end() - 1);
  return in;
}

// Cross-entropy of each target row under the logits, averaged over positions.
// Exposed separately so the one-hot limit is testable without a model.
template <typename Scalar>
Scalar cross_entropy_from_logits(const MatX<Scalar>& logits, const TokenSeq& targets,
                                 MatX<Scalar>* dlogits = nullptr) {
  const Eigen::Index n = logits.rows();
  Scalar loss = 0;
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = logits.row(i);
    const Scalar m = row.maxCoeff();
    VecX<Scalar> shifted = (row.array() - m).matrix().transpose();
    const Scalar lse = std::log(shifted.array().exp().sum());
    loss += lse - shifted(targets[static_cast<size_t>(i)]);
    if (dlogits) {
      dlogits->row(i) = ((shifted.array() - lse).exp()).matrix().transpose() / Scalar(n);
      (*dlogits)(i, targets[static_cast<size_t>(i)]) -= Scalar(1) / Scalar(n);
    }
  }
  return loss / Scalar(n);
}

// Loss of one instance plus (optionally) gradients accumulated into *grads,
// scaled by grad_scale. A non-null dropout_rng turns training dropout on.
template <typename Scalar>
Scalar sequence_loss(const ModelParams<Scalar>& params, const ModelConfig& cfg,
                     const TaskInstance& inst, Scalar tau, ModelParams<Scalar>* grads = nullptr,
                     Scalar grad_scale = 1, std::mt19937* dropout_rng = nullptr) {
  if (inst.target_ids.empty()) {
    throw std::invalid_argument("sequence_loss: empty target");
  }
  const TokenSeq dec_in = decoder_input_for(inst.target_ids);
  ForwardCache<Scalar> cache = forward(params, cfg, inst.input_ids, dec_in, tau,
                                       dropout_rng != nullptr, dropout_rng);
  MatX<Scalar> dlogits;
  const Scalar loss =
      cross_entropy_from_logits<Scalar>(cache.logits, inst.target_ids, grads ? &dlogits : nullptr);
  if (grads) {
    if (grad_scale != Scalar(1)) dlogits *= grad_scale;
    backward(params, cfg, cache, dlogits, *grads);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

template <typename Scalar>
struct OptimizerState {
  ModelParams<Scalar> m, v;
  int64_t step = 0;

  static OptimizerState zero(const ModelConfig& cfg) {
    return {zeros_like_config<Scalar>(cfg), zeros_like_config<Scalar>(cfg), 0};
  }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double grad_clip_norm = 1e9;
};

// Global-norm clip, Adam moments with bias correction, then the decoupled
// decay: p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p.
template <typename Scalar>
void optimizer_step(ModelParams<Scalar>& params, OptimizerState<Scalar>& state,
                    ModelParams<Scalar>& grads, double lr, const AdamHyper& h) {
  auto pv = tensor_views(params);
  auto gv = tensor_views(grads);
  auto mv = tensor_views(state.m);
  auto vv = tensor_views(state.v);

  double sq_norm = 0;
  for (size_t i = 0; i < gv.size(); ++i) {
    Eigen::Map<VecX<Scalar>> g(gv[i].data, gv[i].size());
    if (!g.allFinite()) {
      throw std::runtime_error("optimizer_step: non-finite gradient in tensor '" + gv[i].name +
                               "' at step " + std::to_string(state.step));
    }
    sq_norm += static_cast<double>(g.squaredNorm());
  }
  const double norm = std::sqrt(sq_norm);
  if (norm > h.grad_clip_norm) {
    const Scalar scale = static_cast<Scalar>(h.grad_clip_norm / norm);
    for (auto& t : gv) Eigen::Map<VecX<Scalar>>(t.data, t.size()) *= scale;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

  for (size_t i = 0; i < pv.size(); ++i) {
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> p(pv[i].data, pv[i].size());
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> g(gv[i].data, gv[i].size());
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> m(mv[i].data, mv[i].size());
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> v(vv[i].data, vv[i].size());
    m = Scalar(h.beta1) * m + Scalar(1.0 - h.beta1) * g;
    v = Scalar(h.beta2) * v + Scalar(1.0 - h.beta2) * g.square();
    p -= Scalar(lr) * ((m / Scalar(bc1)) / ((v / Scalar(bc2)).sqrt() + Scalar(h.eps))) +
         Scalar(lr * h.weight_decay) * p;
  }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainLogRow {
  int64_t step = 0;
  int epoch = 0;
  double loss = 0;
  double tau = 0;
  double lr = 0;
};

struct TrainResult {
  ModelParams<float> params;
  OptimizerState<float> opt;
  std::vector<TrainLogRow> log;
  ScheduleSpec schedule;   // with the resolved total_steps
  double final_tau = 1.0;  // temperature at the last update; decode default
  int64_t n_instances = 0;
};

// Mixed multi-task training over the corpus: builds instances, shuffles each
// epoch with the seeded RNG, steps AdamW under the linear schedules.
// Single-threaded and fully deterministic given the seeds.
TrainResult train(const Corpus& corpus, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  PromptStyle style, bool enable_aux, bool enable_lts, const Vocabulary& vocab,
                  int max_input_len);

}  // namespace docdial
