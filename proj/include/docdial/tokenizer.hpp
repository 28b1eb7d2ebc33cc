#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "docdial/corpus.hpp"

namespace docdial {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

// Word-level vocabulary with a fixed block of reserved special tokens at
// ids 0..13, followed by the prompt scaffold words, followed by corpus words
// ordered by (frequency desc, token asc).
struct Vocabulary {
  // Reserved ids. The <gen_*> markers are part of the reserved block but are
  // not emitted by the serialization pipeline.
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kUser = 3;
  static constexpr TokenId kAgent = 4;
  static constexpr TokenId kGrounding = 5;
  static constexpr TokenId kTitleOpen = 6;
  static constexpr TokenId kTitleClose = 7;
  static constexpr TokenId kGenBoth = 8;
  static constexpr TokenId kGenGrounding = 9;
  static constexpr TokenId kGenAgent = 10;
  static constexpr TokenId kTask1 = 11;
  static constexpr TokenId kTask2 = 12;
  static constexpr TokenId kTask3 = 13;
  static constexpr int kNumSpecials = 14;

  static const std::array<const char*, kNumSpecials>& special_surfaces();

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, TokenId> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }
  // Id for an exact surface form, or kUnk.
  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;  // throws std::out_of_range
  bool is_special(TokenId id) const { return id >= 0 && id < kNumSpecials; }

  // Built from a line-delimited token list where the line number is the id
  // (the checkpoint header embeds the vocabulary this way).
  static Vocabulary from_token_list(std::vector<std::string> tokens);
};

// Splitting rule shared by build_vocab and encode: whitespace split with
// punctuation detached as single-character tokens; a whitespace-delimited
// piece that exactly matches a special surface stays atomic.
std::vector<std::string> tokenize_text(const std::string& text);

Vocabulary build_vocab(const Corpus& corpus, int min_freq);

TokenSeq encode(const Vocabulary& vocab, const std::string& text);

// Space-joined surface forms; PAD and EOS are dropped.
std::string decode(const Vocabulary& vocab, const TokenSeq& ids);

}  // namespace docdial
