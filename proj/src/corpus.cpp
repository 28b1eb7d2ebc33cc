#include "docdial/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "docdial/utf8.hpp"

namespace docdial {

using nlohmann::json;

const char* role_name(Role role) { return role == Role::User ? "user" : "agent"; }

Role role_from_name(const std::string& name) {
  if (name == "user") return Role::User;
  if (name == "agent") return Role::Agent;
  throw ParseError("unknown role '" + name + "' (expected 'user' or 'agent')");
}

const Document& Corpus::document_for(const Dialogue& d) const {
  auto it = documents.find(d.doc_id);
  if (it == documents.end()) {
    throw ValidationError("dialogue '" + d.dial_id + "' references unknown doc_id '" +
                          d.doc_id + "'");
  }
  return it->second;
}

int64_t Corpus::agent_turn_count() const {
  int64_t n = 0;
  for (const auto& d : dialogues) {
    for (const auto& t : d.turns) {
      if (t.role == Role::Agent) ++n;
    }
  }
  return n;
}

namespace {

void validate_document(const Document& doc) {
  if (doc.title.empty()) {
    throw ValidationError("document '" + doc.doc_id + "': empty title");
  }
  const int64_t len = utf8_length(doc.text);
  int64_t prev_end = 0;
  for (size_t i = 0; i < doc.sentence_bounds.size(); ++i) {
    const CharSpan& s = doc.sentence_bounds[i];
    if (s.begin >= s.end || s.begin < prev_end || s.end > len) {
      std::ostringstream os;
      os << "document '" << doc.doc_id << "': bad sentence bound #" << i << " [" << s.begin
         << "," << s.end << ") over text of length " << len;
      throw ValidationError(os.str());
    }
    prev_end = s.end;
  }
}

void validate_dialogue(const Dialogue& d, const Document& doc) {
  if (d.turns.size() < 2) {
    throw ValidationError("dialogue '" + d.dial_id + "': needs at least one (user, agent) pair");
  }
  const int64_t doc_len = utf8_length(doc.text);
  bool has_pair = false;
  for (size_t i = 0; i < d.turns.size(); ++i) {
    const Turn& t = d.turns[i];
    const Role expected = (i % 2 == 0) ? Role::User : Role::Agent;
    if (t.role != expected) {
      std::ostringstream os;
      os << "dialogue '" << d.dial_id << "': turn " << i << " must be " << role_name(expected)
         << " (roles alternate starting with user)";
      throw ValidationError(os.str());
    }
    if (t.role == Role::Agent) {
      has_pair = true;
      if (!t.grounding) {
        std::ostringstream os;
        os << "dialogue '" << d.dial_id << "': agent turn " << i << " lacks a grounding span";
        throw ValidationError(os.str());
      }
      const CharSpan& g = *t.grounding;
      if (g.begin < 0 || g.begin >= g.end || g.end > doc_len) {
        std::ostringstream os;
        os << "dialogue '" << d.dial_id << "': agent turn " << i << " grounding [" << g.begin
           << "," << g.end << ") out of range for document '" << doc.doc_id << "' of length "
           << doc_len;
        throw ValidationError(os.str());
      }
    }
  }
  if (!has_pair) {
    throw ValidationError("dialogue '" + d.dial_id + "': no agent turn");
  }
}

}  // namespace

void validate(const Corpus& corpus) {
  for (const auto& [id, doc] : corpus.documents) {
    if (id != doc.doc_id) {
      throw ValidationError("document map key '" + id + "' != doc_id '" + doc.doc_id + "'");
    }
    validate_document(doc);
  }
  std::map<std::string, int> seen;
  for (const auto& d : corpus.dialogues) {
    if (++seen[d.dial_id] > 1) {
      throw ValidationError("duplicate dial_id '" + d.dial_id + "'");
    }
    validate_dialogue(d, corpus.document_for(d));
  }
}

namespace {

json doc_to_json(const Document& doc) {
  json bounds = json::array();
  for (const CharSpan& s : doc.sentence_bounds) bounds.push_back({s.begin, s.end});
  return json{{"doc_id", doc.doc_id},
              {"title", doc.title},
              {"text", doc.text},
              {"sentence_bounds", bounds}};
}

Document doc_from_json(const json& j) {
  Document doc;
  doc.doc_id = j.at("doc_id").get<std::string>();
  doc.title = j.at("title").get<std::string>();
  doc.text = j.at("text").get<std::string>();
  for (const auto& b : j.at("sentence_bounds")) {
    doc.sentence_bounds.push_back({b.at(0).get<int64_t>(), b.at(1).get<int64_t>()});
  }
  return doc;
}

json dialogue_to_json(const Dialogue& d) {
  json turns = json::array();
  for (const Turn& t : d.turns) {
    json jt{{"role", role_name(t.role)}, {"utterance", t.utterance}};
    if (t.grounding) {
      jt["grounding"] = {{"start", t.grounding->begin}, {"end", t.grounding->end}};
    } else {
      jt["grounding"] = nullptr;
    }
    turns.push_back(std::move(jt));
  }
  return json{{"dial_id", d.dial_id}, {"doc_id", d.doc_id}, {"turns", turns}};
}

Dialogue dialogue_from_json(const json& j) {
  Dialogue d;
  d.dial_id = j.at("dial_id").get<std::string>();
  d.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& jt : j.at("turns")) {
    Turn t;
    t.role = role_from_name(jt.at("role").get<std::string>());
    t.utterance = jt.at("utterance").get<std::string>();
    const auto& g = jt.at("grounding");
    if (!g.is_null()) {
      t.grounding = CharSpan{g.at("start").get<int64_t>(), g.at("end").get<int64_t>()};
    }
    d.turns.push_back(std::move(t));
  }
  return d;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      fn(j);
    } catch (const json::exception& e) {
      std::ostringstream os;
      os << path << ":" << lineno << ": " << e.what();
      throw ParseError(os.str());
    }
  }
}

}  // namespace

Corpus load_corpus(const std::string& documents_path, const std::string& dialogues_path) {
  Corpus corpus;
  for_each_jsonl(documents_path, [&](const json& j) {
    Document doc = doc_from_json(j);
    corpus.documents[doc.doc_id] = std::move(doc);
  });
  for_each_jsonl(dialogues_path, [&](const json& j) {
    corpus.dialogues.push_back(dialogue_from_json(j));
  });
  validate(corpus);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& documents_path,
                  const std::string& dialogues_path) {
  std::ofstream docs(documents_path, std::ios::binary);
  if (!docs) throw std::runtime_error("cannot write '" + documents_path + "'");
  for (const auto& [id, doc] : corpus.documents) {
    docs << doc_to_json(doc).dump() << '\n';
  }
  std::ofstream dials(dialogues_path, std::ios::binary);
  if (!dials) throw std::runtime_error("cannot write '" + dialogues_path + "'");
  for (const Dialogue& d : corpus.dialogues) {
    dials << dialogue_to_json(d).dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

const std::array<const char*, 16> kTopics = {
    "license",  "permit",  "passport",   "visa",    "registration", "benefits",
    "insurance", "pension", "enrollment", "refund",  "parking",      "housing",
    "transfer", "warranty", "deposit",   "billing"};

const std::array<const char*, 20> kSlots = {
    "fee",     "form",    "deadline", "office", "paperwork", "photo",  "signature",
    "renewal", "appointment", "notice", "record", "payment", "letter", "card",
    "code",    "receipt", "stamp",    "review", "audit",     "waiver"};

const std::array<const char*, 8> kNumbers = {"5", "10", "15", "20", "30", "60", "90", "120"};

std::string make_sentence(int tmpl, const std::string& slot, const std::string& topic,
                          const std::string& number) {
  switch (tmpl % 4) {
    case 0: return "the " + slot + " for " + topic + " expires after " + number + " days .";
    case 1: return "each " + topic + " " + slot + " costs " + number + " dollars .";
    case 2: return "submit the " + slot + " before your " + topic + " interview .";
    default: return "the " + slot + " must list every " + topic + " detail .";
  }
}

std::string make_question(int tmpl, const std::string& slot) {
  switch (tmpl % 3) {
    case 0: return "what about the " + slot + " ?";
    case 1: return "how does the " + slot + " work ?";
    default: return "i need help with the " + slot + " .";
  }
}

std::string wrap_response(int tmpl, const std::string& sentence) {
  switch (tmpl % 3) {
    case 0: return "according to the policy , " + sentence + " does that help ?";
    case 1: return "here is the rule : " + sentence + " let me know .";
    default: return "please note : " + sentence + " anything else ?";
  }
}

}  // namespace

Corpus synth_corpus(uint64_t seed, int n_dialogues, int n_docs, int max_turns) {
  if (n_dialogues < 1 || n_docs < 1 || max_turns < 2) {
    throw std::invalid_argument("synth_corpus: need n_dialogues >= 1, n_docs >= 1, max_turns >= 2");
  }
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };

  Corpus corpus;
  // slot_of[doc][sentence] remembers which slot word marks each sentence so
  // user questions can reference it.
  std::vector<std::vector<int>> slot_of(n_docs);
  std::vector<std::string> doc_ids(n_docs);

  for (int di = 0; di < n_docs; ++di) {
    Document doc;
    doc.doc_id = "doc-" + std::to_string(di);
    const std::string topic = kTopics[di % kTopics.size()];
    doc.title = topic + " guide part " + std::to_string(di);
    const int n_sent = 4 + pick(3);  // 4..6 sentences

    // Unique slot word per sentence within a document.
    std::vector<int> slots(kSlots.size());
    for (size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(n_sent);
    slot_of[di] = slots;

    int64_t offset = 0;
    for (int si = 0; si < n_sent; ++si) {
      const std::string sent =
          make_sentence(pick(4), kSlots[slots[si]], topic, kNumbers[pick(kNumbers.size())]);
      if (si > 0) {
        doc.text += ' ';
        ++offset;
      }
      const int64_t len = utf8_length(sent);
      doc.sentence_bounds.push_back({offset, offset + len});
      doc.text += sent;
      offset += len;
    }
    doc_ids[di] = doc.doc_id;
    corpus.documents[doc.doc_id] = std::move(doc);
  }

  for (int gi = 0; gi < n_dialogues; ++gi) {
    Dialogue d;
    d.dial_id = "dial-" + std::to_string(gi);
    const int di = pick(n_docs);
    d.doc_id = doc_ids[di];
    const Document& doc = corpus.documents[d.doc_id];
    const int n_pairs = 1 + pick(max_turns / 2);
    for (int pi = 0; pi < n_pairs; ++pi) {
      const int si = pick(static_cast<int>(doc.sentence_bounds.size()));
      const int slot = slot_of[di][si];
      const CharSpan span = doc.sentence_bounds[si];
      const std::string sentence = utf8_slice(doc.text, span.begin, span.end);
      d.turns.push_back({Role::User, make_question(slot, kSlots[slot]), std::nullopt});
      d.turns.push_back({Role::Agent, wrap_response(slot, sentence), span});
    }
    corpus.dialogues.push_back(std::move(d));
  }
  validate(corpus);
  return corpus;
}

// ---------------------------------------------------------------------------
// Low-resource splits
// ---------------------------------------------------------------------------

std::string Fraction::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Fraction Fraction::parse(const std::string& text) {
  static const std::array<Fraction, 5> kAllowed = {
      Fraction{1, 32}, Fraction{1, 16}, Fraction{1, 8}, Fraction{1, 4}, Fraction{1, 1}};
  for (const Fraction& f : kAllowed) {
    if (text == f.str()) return f;
  }
  throw std::invalid_argument("invalid fraction '" + text +
                              "' (expected one of 1/32, 1/16, 1/8, 1/4, 1)");
}

Corpus lowres_split(const Corpus& corpus, const Fraction& fraction, uint64_t seed) {
  if (corpus.dialogues.empty()) {
    throw ValidationError("lowres_split: empty corpus");
  }
  const int64_t n = static_cast<int64_t>(corpus.dialogues.size());
  const int64_t keep =
      (n * fraction.num + fraction.den - 1) / fraction.den;  // ceil(fraction * N)

  std::vector<size_t> order(corpus.dialogues.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Corpus out;
  for (int64_t i = 0; i < keep; ++i) {
    const Dialogue& d = corpus.dialogues[order[i]];
    out.dialogues.push_back(d);
    out.documents[d.doc_id] = corpus.documents.at(d.doc_id);
  }
  return out;
}

}  // namespace docdial
