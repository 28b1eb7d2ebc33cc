#pragma once

#include <optional>
#include <string>
#include <vector>

#include "docdial/corpus.hpp"

namespace docdial {

// Span-QA style normalization applied before EM/F1: lowercase, strip
// punctuation, drop the articles a/an/the, collapse whitespace.
std::string normalize(const std::string& text);

int exact_match(const std::string& pred, const std::string& gold);

// Harmonic mean of token-multiset precision/recall over normalized tokens.
// Both empty -> 1, exactly one empty -> 0.
double token_f1(const std::string& pred, const std::string& gold);

// Corpus-level BLEU-4 on whitespace-tokenized lowercased text: clipped n-gram
// counts pooled over the corpus, uniform geometric mean, brevity penalty
// exp(1 - r/c) when c < r. Any pooled precision of zero gives 0. Scale 0-100.
double corpus_bleu(const std::vector<std::string>& preds, const std::vector<std::string>& golds);

struct PredictionRecord {
  std::string dial_id;
  int turn_index = 0;
  std::string grounding_pred;
  std::string response_pred;
  std::optional<std::string> parse_error;  // set => scored as empty prediction
};

struct PerExampleScore {
  std::string dial_id;
  int turn_index = 0;
  double em = 0;
  double f1 = 0;
};

struct EvalReport {
  double em = 0;    // percent, macro-averaged over examples
  double f1 = 0;    // percent
  double bleu = 0;  // percent
  int64_t n_examples = 0;
  int64_t n_parse_failures = 0;
  std::vector<PerExampleScore> per_example;
  // run metadata
  std::string checkpoint_id;
  std::string label = "run";
  std::string fraction = "1";
  std::string flags;
};

// Scores predictions against the gold grounding span text (EM/F1) and the
// gold agent utterance (BLEU). Every (dial_id, turn_index) must resolve to an
// agent turn of the corpus.
EvalReport evaluate(const std::vector<PredictionRecord>& predictions, const Corpus& corpus);

std::vector<PredictionRecord> read_predictions(const std::string& path);
void write_predictions(const std::vector<PredictionRecord>& predictions,
                       const std::string& path);

void write_report_json(const EvalReport& report, const std::string& path);
// One flat row: label, fraction, em, f1, bleu, n, parse_failures.
extern const char* kReportTsvHeader;
std::string report_tsv_row(const EvalReport& report);
void write_report_tsv(const EvalReport& report, const std::string& path);

}  // namespace docdial
