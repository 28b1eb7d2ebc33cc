#pragma once

#include <utility>

#include "docdial/model.hpp"
#include "docdial/trainer.hpp"

namespace docdial {

// Teacher-forced cross-attention mass landing on input positions
// [span.first, span.second), averaged over decoder layers, heads and target
// positions. Used to probe whether training sharpened attention toward the
// grounding tokens.
template <typename Scalar>
double grounding_attention_mass(const ModelParams<Scalar>& params, const ModelConfig& cfg,
                                const TaskInstance& inst, Scalar tau,
                                std::pair<int, int> span) {
  const int width = span.second - span.first;
  if (width <= 0) return 0.0;
  ForwardCache<Scalar> cache =
      forward(params, cfg, inst.input_ids, decoder_input_for(inst.target_ids), tau);
  double total = 0;
  int64_t rows = 0;
  for (const auto& layer : cache.dec) {
    for (const auto& w : layer.cross_attn.out.weights) {
      total += static_cast<double>(w.middleCols(span.first, width).sum());
      rows += w.rows();
    }
  }
  return rows == 0 ? 0.0 : total / static_cast<double>(rows);
}

}  // namespace docdial
