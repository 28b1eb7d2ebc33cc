#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docdial/errors.hpp"

namespace docdial {

// Half-open [begin, end) character span, in Unicode scalar values.
struct CharSpan {
  int64_t begin = 0;
  int64_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::string text;
  std::vector<CharSpan> sentence_bounds;  // sorted, non-overlapping, in range
  friend bool operator==(const Document&, const Document&) = default;
};

enum class Role { User, Agent };

const char* role_name(Role role);
Role role_from_name(const std::string& name);  // throws ParseError

struct Turn {
  Role role = Role::User;
  std::string utterance;
  std::optional<CharSpan> grounding;  // agent turns only; span into the document text
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string dial_id;
  std::string doc_id;
  std::vector<Turn> turns;  // strictly alternating, user first
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Corpus {
  std::map<std::string, Document> documents;
  std::vector<Dialogue> dialogues;

  const Document& document_for(const Dialogue& d) const;
  int64_t agent_turn_count() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Checks every Document/Dialogue/Corpus invariant; throws ValidationError
// naming the offending doc_id/dial_id and offsets.
void validate(const Corpus& corpus);

// Line-delimited JSON ingestion; see README for the record schemas.
// Both loads run validate() on the result.
Corpus load_corpus(const std::string& documents_path, const std::string& dialogues_path);
void write_corpus(const Corpus& corpus, const std::string& documents_path,
                  const std::string& dialogues_path);

// Deterministic toy corpus: templated sentences, one grounding sentence per
// agent turn, agent utterances wrap the grounding sentence so the mapping
// context -> (grounding, response) is learnable.
Corpus synth_corpus(uint64_t seed, int n_dialogues, int n_docs, int max_turns);

// Training-set fraction for the low-resource regime.
struct Fraction {
  int num = 1;
  int den = 1;
  double value() const { return static_cast<double>(num) / den; }
  std::string str() const;
  // Accepts "1", "1/4", "1/8", "1/16", "1/32"; anything else throws.
  static Fraction parse(const std::string& text);
};

// Seeded shuffle, then keep the first ceil(fraction * N) dialogues. For a
// fixed seed the smaller fraction is a prefix (hence subset) of the larger.
Corpus lowres_split(const Corpus& corpus, const Fraction& fraction, uint64_t seed);

}  // namespace docdial
