#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sgvqa/core/scene_graph.hpp"

namespace sgvqa::core {

// Token table with PAD at index 0 and UNK at index 1. Lookup never fails;
// unknown tokens map to UNK.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // must start with PAD, UNK

  int lookup(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(const std::string& token) const;

  // FNV-1a fingerprint over the token list; cheap compatibility check for
  // checkpoints and manifests.
  std::string hash() const;

  std::vector<int> encode(const std::vector<std::string>& words) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Words from node names, attributes, relation names (whitespace-split) and
// question texts, kept when corpus frequency >= min_count. Token order is by
// descending frequency, ties alphabetical.
Vocabulary build_vocabulary(const std::vector<SceneGraph>& graphs,
                            const std::vector<std::string>& question_texts, int min_count = 1);

// Lowercases, strips punctuation, splits on whitespace.
std::vector<std::string> tokenize_text(const std::string& text);

// Name words followed by attribute words, the node's text sequence.
std::vector<std::string> node_words(const ObjectNode& node);

}  // namespace sgvqa::core
