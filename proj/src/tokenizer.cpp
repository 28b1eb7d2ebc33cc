#include "docdial/tokenizer.hpp"

#include <algorithm>
#include <cctype>

namespace docdial {

const std::array<const char*, Vocabulary::kNumSpecials>& Vocabulary::special_surfaces() {
  static const std::array<const char*, kNumSpecials> surfaces = {
      "<pad>",     "<eos>",     "<unk>",  "<user>",          "<agent>",
      "<grounding>", "<title>", "</title>", "<gen_both>",    "<gen_grounding>",
      "<gen_agent>", "<Task1>", "<Task2>", "<Task3>"};
  return surfaces;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range (vocab size " +
                            std::to_string(size()) + ")");
  }
  return id_to_token[id];
}

Vocabulary Vocabulary::from_token_list(std::vector<std::string> tokens) {
  Vocabulary v;
  v.id_to_token = std::move(tokens);
  for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[i]] = i;
  if (v.size() < kNumSpecials) {
    throw ParseError("vocabulary listing shorter than the reserved special block");
  }
  for (int i = 0; i < kNumSpecials; ++i) {
    if (v.id_to_token[i] != special_surfaces()[i]) {
      throw ParseError("vocabulary listing: id " + std::to_string(i) + " is '" +
                       v.id_to_token[i] + "', expected '" + special_surfaces()[i] + "'");
    }
  }
  return v;
}

namespace {

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_special_surface(const std::string& piece) {
  const auto& surfaces = Vocabulary::special_surfaces();
  return std::find_if(surfaces.begin(), surfaces.end(),
                      [&](const char* s) { return piece == s; }) != surfaces.end();
}

void split_piece(const std::string& piece, std::vector<std::string>& out) {
  if (is_special_surface(piece)) {
    out.push_back(piece);
    return;
  }
  std::string word;
  for (char c : piece) {
    if (is_ascii_punct(c)) {
      if (!word.empty()) {
        out.push_back(word);
        word.clear();
      }
      out.push_back(std::string(1, c));
    } else {
      word += c;
    }
  }
  if (!word.empty()) out.push_back(word);
}

// Prompt scaffold words shared by the connected prompts; always present so a
// prompt never maps to <unk> regardless of the training corpus.
const std::array<const char*, 3> kScaffold = {"generate", "then", ":"};

}  // namespace

std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> out;
  std::string piece;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!piece.empty()) {
        split_piece(piece, out);
        piece.clear();
      }
    } else {
      piece += c;
    }
  }
  if (!piece.empty()) split_piece(piece, out);
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, int min_freq) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");

  std::unordered_map<std::string, int64_t> freq;
  auto count = [&freq](const std::string& text) {
    for (const std::string& tok : tokenize_text(text)) ++freq[tok];
  };
  for (const auto& [id, doc] : corpus.documents) {
    count(doc.title);
    count(doc.text);
  }
  for (const Dialogue& d : corpus.dialogues) {
    for (const Turn& t : d.turns) count(t.utterance);
  }

  Vocabulary v;
  for (const char* s : Vocabulary::special_surfaces()) v.id_to_token.emplace_back(s);
  for (const char* s : kScaffold) v.id_to_token.emplace_back(s);

  std::vector<std::pair<std::string, int64_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, n] : entries) {
    if (n < min_freq) continue;
    if (is_special_surface(tok)) continue;
    if (std::find_if(kScaffold.begin(), kScaffold.end(),
                     [&](const char* s) { return tok == s; }) != kScaffold.end()) {
      continue;
    }
    v.id_to_token.push_back(tok);
  }
  for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[i]] = i;
  return v;
}

TokenSeq encode(const Vocabulary& vocab, const std::string& text) {
  TokenSeq ids;
  for (const std::string& tok : tokenize_text(text)) ids.push_back(vocab.id_of(tok));
  return ids;
}

std::string decode(const Vocabulary& vocab, const TokenSeq& ids) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token_of(id);
    if (id == Vocabulary::kPad || id == Vocabulary::kEos) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace docdial
