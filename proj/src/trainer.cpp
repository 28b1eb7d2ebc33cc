#include "docdial/trainer.hpp"

#include <algorithm>
#include <numeric>

namespace docdial {

TrainResult train(const Corpus& corpus, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  PromptStyle style, bool enable_aux, bool enable_lts, const Vocabulary& vocab,
                  int max_input_len) {
  mcfg.validate();
  tcfg.validate();
  if (mcfg.vocab_size != vocab.size()) {
    throw std::invalid_argument("train: model vocab_size " + std::to_string(mcfg.vocab_size) +
                                " != vocabulary size " + std::to_string(vocab.size()));
  }

  const std::vector<TaskInstance> instances =
      build_training_set(corpus, style, enable_aux, vocab, max_input_len);
  if (instances.empty()) {
    throw ValidationError("train: corpus yields no training instances");
  }
  const int64_t n = static_cast<int64_t>(instances.size());
  const int64_t steps_per_epoch = (n + tcfg.batch_size - 1) / tcfg.batch_size;
  const int64_t total_steps = static_cast<int64_t>(tcfg.epochs) * steps_per_epoch;

  ScheduleSpec schedule = tcfg.schedule;
  schedule.total_steps = total_steps;
  schedule.validate();

  TrainResult res;
  res.schedule = schedule;
  res.n_instances = n;
  res.params = init_model<float>(mcfg);
  res.opt = OptimizerState<float>::zero(mcfg);
  res.log.reserve(static_cast<size_t>(total_steps));

  AdamHyper adam;
  adam.beta1 = tcfg.adam_beta1;
  adam.beta2 = tcfg.adam_beta2;
  adam.eps = tcfg.adam_eps;
  adam.weight_decay = tcfg.weight_decay;
  adam.grad_clip_norm = tcfg.grad_clip_norm;

  std::mt19937 shuffle_rng(static_cast<uint32_t>(tcfg.shuffle_seed));
  std::mt19937 dropout_rng(static_cast<uint32_t>(tcfg.shuffle_seed) ^ 0x5851f42dU);

  std::vector<size_t> order(instances.size());
  std::iota(order.begin(), order.end(), size_t{0});

  ModelParams<float> grads = zeros_like_config<float>(mcfg);
  int64_t step = 0;
  double tau = 1.0;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (int64_t b = 0; b < steps_per_epoch; ++b) {
      const size_t lo = static_cast<size_t>(b) * tcfg.batch_size;
      const size_t hi = std::min(lo + tcfg.batch_size, instances.size());
      const float inv_batch = 1.0f / static_cast<float>(hi - lo);

      tau = enable_lts ? temperature_at(schedule, step) : 1.0;
      const double lr = lr_at(schedule, step);

      set_zero(grads);
      double loss = 0;
      for (size_t i = lo; i < hi; ++i) {
        loss += sequence_loss<float>(res.params, mcfg, instances[order[i]],
                                     static_cast<float>(tau), &grads, inv_batch,
                                     mcfg.dropout_rate > 0 ? &dropout_rng : nullptr);
      }
      loss *= inv_batch;
      optimizer_step(res.params, res.opt, grads, lr, adam);
      res.log.push_back({step, epoch, loss, tau, lr});
      ++step;
    }
  }
  res.final_tau = tau;
  return res;
}

}  // namespace docdial
