#include "docdial/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "docdial/utf8.hpp"

namespace docdial {

using nlohmann::json;

std::string normalize(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    if (std::ispunct(static_cast<unsigned char>(c))) continue;
    lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::istringstream in(lowered);
  std::string tok, out;
  while (in >> tok) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

int exact_match(const std::string& pred, const std::string& gold) {
  return normalize(pred) == normalize(gold) ? 1 : 0;
}

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  std::string tok;
  while (in >> tok) toks.push_back(tok);
  return toks;
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double token_f1(const std::string& pred, const std::string& gold) {
  const std::vector<std::string> p = split_ws(normalize(pred));
  const std::vector<std::string> g = split_ws(normalize(gold));
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;

  std::map<std::string, int64_t> gold_counts;
  for (const auto& t : g) ++gold_counts[t];
  int64_t common = 0;
  for (const auto& t : p) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double corpus_bleu(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("corpus_bleu: prediction/reference length mismatch");
  }
  if (preds.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");

  constexpr int kMaxOrder = 4;
  int64_t matched[kMaxOrder + 1] = {0};
  int64_t total[kMaxOrder + 1] = {0};
  int64_t cand_len = 0, ref_len = 0;

  for (size_t i = 0; i < preds.size(); ++i) {
    const std::vector<std::string> p = split_ws(lowercase(preds[i]));
    const std::vector<std::string> g = split_ws(lowercase(golds[i]));
    cand_len += static_cast<int64_t>(p.size());
    ref_len += static_cast<int64_t>(g.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      std::map<std::vector<std::string>, int64_t> ref_ngrams;
      for (size_t j = 0; j + n <= g.size(); ++j) {
        ++ref_ngrams[std::vector<std::string>(g.begin() + j, g.begin() + j + n)];
      }
      std::map<std::vector<std::string>, int64_t> cand_ngrams;
      for (size_t j = 0; j + n <= p.size(); ++j) {
        ++cand_ngrams[std::vector<std::string>(p.begin() + j, p.begin() + j + n)];
      }
      for (const auto& [ng, count] : cand_ngrams) {
        total[n] += count;
        auto it = ref_ngrams.find(ng);
        if (it != ref_ngrams.end()) matched[n] += std::min(count, it->second);
      }
    }
  }

  if (cand_len == 0) return 0.0;
  double log_precision_sum = 0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_precision_sum += std::log(static_cast<double>(matched[n]) / total[n]);
  }
  const double bp =
      cand_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / cand_len) : 1.0;
  return 100.0 * bp * std::exp(log_precision_sum / kMaxOrder);
}

EvalReport evaluate(const std::vector<PredictionRecord>& predictions, const Corpus& corpus) {
  std::map<std::pair<std::string, int>, const Dialogue*> gold;
  for (const Dialogue& d : corpus.dialogues) {
    for (int i = 0; i < static_cast<int>(d.turns.size()); ++i) {
      if (d.turns[i].role == Role::Agent) gold[{d.dial_id, i}] = &d;
    }
  }

  EvalReport report;
  std::vector<std::string> responses, gold_responses;
  double em_sum = 0, f1_sum = 0;
  for (const PredictionRecord& pred : predictions) {
    auto it = gold.find({pred.dial_id, pred.turn_index});
    if (it == gold.end()) {
      throw ValidationError("evaluate: prediction (" + pred.dial_id + ", " +
                            std::to_string(pred.turn_index) +
                            ") does not resolve to a gold agent turn");
    }
    const Dialogue& d = *it->second;
    const Turn& turn = d.turns[static_cast<size_t>(pred.turn_index)];
    const Document& doc = corpus.document_for(d);
    const std::string gold_grounding =
        utf8_slice(doc.text, turn.grounding->begin, turn.grounding->end);

    const bool failed = pred.parse_error.has_value();
    if (failed) ++report.n_parse_failures;
    const std::string& gp = failed ? std::string() : pred.grounding_pred;
    const std::string& rp = failed ? std::string() : pred.response_pred;

    PerExampleScore s;
    s.dial_id = pred.dial_id;
    s.turn_index = pred.turn_index;
    s.em = exact_match(gp, gold_grounding);
    s.f1 = token_f1(gp, gold_grounding);
    em_sum += s.em;
    f1_sum += s.f1;
    report.per_example.push_back(std::move(s));

    responses.push_back(rp);
    gold_responses.push_back(turn.utterance);
  }

  report.n_examples = static_cast<int64_t>(predictions.size());
  if (report.n_examples > 0) {
    report.em = 100.0 * em_sum / static_cast<double>(report.n_examples);
    report.f1 = 100.0 * f1_sum / static_cast<double>(report.n_examples);
    report.bleu = corpus_bleu(responses, gold_responses);
  }
  return report;
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open predictions '" + path + "'");
  std::vector<PredictionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      PredictionRecord r;
      r.dial_id = j.at("dial_id").get<std::string>();
      r.turn_index = j.at("turn_index").get<int>();
      r.grounding_pred = j.at("grounding_pred").get<std::string>();
      r.response_pred = j.at("response_pred").get<std::string>();
      if (!j.at("parse_error").is_null()) {
        r.parse_error = j.at("parse_error").get<std::string>();
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::vector<PredictionRecord>& predictions,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write predictions '" + path + "'");
  for (const PredictionRecord& r : predictions) {
    json j{{"dial_id", r.dial_id},
           {"turn_index", r.turn_index},
           {"grounding_pred", r.grounding_pred},
           {"response_pred", r.response_pred},
           {"parse_error", r.parse_error ? json(*r.parse_error) : json(nullptr)}};
    out << j.dump() << '\n';
  }
}

namespace {

std::string fmt4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace

void write_report_json(const EvalReport& report, const std::string& path) {
  json per = json::array();
  for (const PerExampleScore& s : report.per_example) {
    per.push_back(
        {{"dial_id", s.dial_id}, {"turn_index", s.turn_index}, {"em", s.em}, {"f1", s.f1}});
  }
  json j{{"em", report.em},
         {"f1", report.f1},
         {"bleu", report.bleu},
         {"n_examples", report.n_examples},
         {"n_parse_failures", report.n_parse_failures},
         {"per_example", per},
         {"checkpoint_id", report.checkpoint_id},
         {"label", report.label},
         {"fraction", report.fraction},
         {"flags", report.flags}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  out << j.dump(2) << '\n';
}

const char* kReportTsvHeader = "label\tfraction\tem\tf1\tbleu\tn\tparse_failures";

std::string report_tsv_row(const EvalReport& report) {
  std::ostringstream os;
  os << report.label << '\t' << report.fraction << '\t' << fmt4(report.em) << '\t'
     << fmt4(report.f1) << '\t' << fmt4(report.bleu) << '\t' << report.n_examples << '\t'
     << report.n_parse_failures;
  return os.str();
}

void write_report_tsv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  out << kReportTsvHeader << '\n' << report_tsv_row(report) << '\n';
}

}  // namespace docdial
