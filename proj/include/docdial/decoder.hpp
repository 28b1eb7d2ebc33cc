#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "docdial/model.hpp"
#include "docdial/taskbuilder.hpp"
#include "docdial/trainer.hpp"

namespace docdial {

struct BeamConfig {
  int beam_size = 2;
  int max_output_len = 96;
  double length_penalty = 0.0;  // 0 = rank by raw cumulative log-prob
  double inference_tau = 1.0;

  void validate() const {
    if (beam_size < 1) throw std::invalid_argument("beam config: beam_size must be >= 1");
    if (max_output_len < 2) {
      throw std::invalid_argument("beam config: max_output_len must be >= 2");
    }
    if (!(inference_tau > 0.0)) {
      throw std::invalid_argument("beam config: inference_tau must be > 0");
    }
  }
};

// Breadth-limited search over a step scorer: step(prefix) returns next-token
// log-probabilities. A beam finishes on eos_id; the search stops once
// beam_size beams have finished or prefixes reach max_output_len. Returns the
// best finished beam (best live beam when none finished); ties break toward
// the lexicographically smaller token sequence.
template <typename StepLogProbs>
TokenSeq beam_search(StepLogProbs&& step, int vocab_size, TokenId eos_id,
                     const BeamConfig& cfg) {
  cfg.validate();
  struct Beam {
    TokenSeq seq;
    double score = 0;
  };
  auto better = [](const Beam& a, const Beam& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.seq < b.seq;
  };

  std::vector<Beam> live{Beam{}};
  std::vector<Beam> finished;

  for (int len = 0; len < cfg.max_output_len; ++len) {
    if (live.empty() || static_cast<int>(finished.size()) >= cfg.beam_size) break;
    std::vector<Beam> candidates;
    candidates.reserve(live.size() * static_cast<size_t>(vocab_size));
    for (const Beam& b : live) {
      const VecX<double> lp = step(b.seq);
      for (TokenId v = 0; v < vocab_size; ++v) {
        Beam nb;
        nb.seq = b.seq;
        nb.seq.push_back(v);
        nb.score = b.score + lp(v);
        candidates.push_back(std::move(nb));
      }
    }
    const size_t keep = std::min(candidates.size(), static_cast<size_t>(cfg.beam_size));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep),
                      candidates.end(), better);
    candidates.resize(keep);
    live.clear();
    for (Beam& c : candidates) {
      if (c.seq.back() == eos_id) {
        finished.push_back(std::move(c));
      } else {
        live.push_back(std::move(c));
      }
    }
  }

  auto ranked = [&](const Beam& b) {
    if (cfg.length_penalty == 0.0 || b.seq.empty()) return b.score;
    return b.score / std::pow(static_cast<double>(b.seq.size()), cfg.length_penalty);
  };
  const std::vector<Beam>& pool = finished.empty() ? live : finished;
  const Beam* best = nullptr;
  for (const Beam& b : pool) {
    if (!best || ranked(b) > ranked(*best) ||
        (ranked(b) == ranked(*best) && b.seq < best->seq)) {
      best = &b;
    }
  }
  return best ? best->seq : TokenSeq{};
}

// Next-token log-probabilities from a teacher-forced decoder pass over
// [PAD] ++ prefix; the encoder runs once per input.
template <typename Scalar>
class ModelStepScorer {
 public:
  ModelStepScorer(const ModelParams<Scalar>& params, const ModelConfig& cfg,
                  const TokenSeq& input_ids, Scalar tau)
      : params_(params), cfg_(cfg), input_ids_(input_ids), tau_(tau) {}

  VecX<double> operator()(const TokenSeq& prefix) const {
    TokenSeq dec_in;
    dec_in.reserve(prefix.size() + 1);
    dec_in.push_back(Vocabulary::kPad);
    dec_in.insert(dec_in.end(), prefix.begin(), prefix.end());
    ForwardCache<Scalar> cache = forward(params_, cfg_, input_ids_, dec_in, tau_);
    const auto row = cache.logits.row(cache.logits.rows() - 1);
    const Scalar m = row.maxCoeff();
    VecX<Scalar> shifted = (row.array() - m).matrix().transpose();
    const Scalar lse = std::log(shifted.array().exp().sum());
    return (shifted.array() - lse).matrix().template cast<double>();
  }

 private:
  const ModelParams<Scalar>& params_;
  const ModelConfig& cfg_;
  TokenSeq input_ids_;
  Scalar tau_;
};

// Beam-search generation of the main-task target for one encoded input.
template <typename Scalar>
TokenSeq generate(const ModelParams<Scalar>& params, const ModelConfig& cfg,
                  const TokenSeq& input_ids, const BeamConfig& beam_cfg) {
  if (input_ids.empty()) throw std::invalid_argument("generate: empty input");
  ModelStepScorer<Scalar> scorer(params, cfg, input_ids, static_cast<Scalar>(beam_cfg.inference_tau));
  return beam_search(scorer, cfg.vocab_size, Vocabulary::kEos, beam_cfg);
}

struct Prediction {
  ParsedOutput output;                                  // empty strings on parse failure
  OutputParseError error = OutputParseError::None;
  TokenSeq raw;
};

// Builds the Main-task input for the agent turn (truncated at the same
// max_input_len the model trained with), generates, and parses the result.
// Parse failures are recorded, never thrown.
template <typename Scalar>
Prediction predict(const ModelParams<Scalar>& params, const ModelConfig& cfg,
                   const Dialogue& dialogue, int turn_index, const Document& doc,
                   const Vocabulary& vocab, const BeamConfig& beam_cfg, PromptStyle style,
                   int max_input_len) {
  const TaskInstance inst =
      build_instance(dialogue, turn_index, doc, TaskKind::Main, style, vocab,
                     std::min(max_input_len, cfg.max_positions));
  Prediction pred;
  pred.raw = generate(params, cfg, inst.input_ids, beam_cfg);
  ParseResult parsed = parse_output(pred.raw, vocab);
  pred.error = parsed.error;
  if (parsed.ok()) pred.output = parsed.output;
  return pred;
}

}  // namespace docdial
