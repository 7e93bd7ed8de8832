#include "sgvqa/core/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "sgvqa/util.hpp"

namespace sgvqa::core {

Vocabulary::Vocabulary() : Vocabulary({kPadToken, kUnkToken}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[0] != kPadToken || tokens_[1] != kUnkToken)
    fail("Vocabulary: token list must start with ", kPadToken, ", ", kUnkToken);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<int>(i));
    if (!inserted) fail("Vocabulary: duplicate token '", tokens_[i], "'");
  }
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.find(token) != index_.end();
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) fail("Vocabulary::token: id ", id, " out of range");
  return tokens_[id];
}

std::string Vocabulary::hash() const {
  std::string joined;
  for (const std::string& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return hex64(fnv1a64(joined));
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const std::string& w : words) ids.push_back(lookup(w));
  return ids;
}

std::vector<std::string> tokenize_text(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '\'' || c == '_')
      cleaned.push_back(static_cast<char>(std::tolower(u)));
    else
      cleaned.push_back(' ');
  }
  return split_ws(cleaned);
}

std::vector<std::string> node_words(const ObjectNode& node) {
  std::vector<std::string> words = split_ws(to_lower(node.name));
  for (const std::string& attr : node.attributes)
    for (std::string& w : split_ws(to_lower(attr))) words.push_back(std::move(w));
  return words;
}

Vocabulary build_vocabulary(const std::vector<SceneGraph>& graphs,
                            const std::vector<std::string>& question_texts, int min_count) {
  if (graphs.empty() || question_texts.empty()) fail("build_vocabulary: empty corpus");
  std::map<std::string, int> counts;
  auto count_words = [&counts](const std::vector<std::string>& words) {
    for (const std::string& w : words) counts[w]++;
  };
  for (const SceneGraph& g : graphs) {
    for (const ObjectNode& n : g.nodes) count_words(node_words(n));
    for (const RelationEdge& e : g.edges) count_words(split_ws(to_lower(e.relation)));
  }
  for (const std::string& q : question_texts) count_words(tokenize_text(q));

  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [token, n] : counts)
    if (n >= min_count) kept.emplace_back(token, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens = {Vocabulary::kPadToken, Vocabulary::kUnkToken};
  for (auto& [token, n] : kept) tokens.push_back(token);
  return Vocabulary(std::move(tokens));
}

}  // namespace sgvqa::core
