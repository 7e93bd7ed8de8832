#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgvqa/nn/tape.hpp"

namespace sgvqa::models {

enum class SemanticType { relation, attribute, object, category, global };

const std::array<SemanticType, 5>& all_semantic_types();
std::string to_string(SemanticType t);
// Accepts both full names and the short forms used by GQA question files
// (rel, attr, obj, cat, global).
SemanticType semantic_type_from_string(const std::string& s);

struct QuestionSample {
  std::string question_id;
  std::vector<int> tokens;  // question-vocabulary ids
  std::string question_text;
  std::string image_id;
  int answer = -1;  // answer-vocabulary index, -1 when out of vocabulary
  std::string answer_text;
  SemanticType semantic_type = SemanticType::global;
};

// Fixed answer set built from training-split answers only.
class AnswerVocabulary {
 public:
  AnswerVocabulary() = default;
  explicit AnswerVocabulary(std::vector<std::string> answers);
  static AnswerVocabulary from_training_answers(const std::vector<std::string>& answers);

  int lookup(const std::string& answer) const;  // -1 when absent
  const std::string& answer(int id) const;
  int size() const { return static_cast<int>(answers_.size()); }
  const std::vector<std::string>& answers() const { return answers_; }
  std::string hash() const;

 private:
  std::vector<std::string> answers_;
  std::unordered_map<std::string, int> index_;
};

struct ObjectFeatureSet {
  nn::Matrix features;  // Nv x feature_dim, masked rows zero
  std::vector<uint8_t> mask;
};

struct SpatialFeature {
  nn::Matrix values;  // 1 x feature_dim
};

// Contextual token states with their mean pool.
struct QuestionEmbedding {
  nn::Matrix pooled;        // 1 x h, the mean of token_states rows
  nn::Matrix token_states;  // n x h

  static QuestionEmbedding from_token_states(nn::Matrix token_states);
};

struct AnswerDistribution {
  Eigen::RowVectorXd logits;
  Eigen::RowVectorXd probabilities;

  static AnswerDistribution from_logits(const Eigen::RowVectorXd& logits);
  // Lowest index wins ties.
  int argmax() const;
};

struct MacConfig {
  int steps = 4;
  int memory_dim = 0;   // 0: use the knowledge-base width
  int control_dim = 0;  // 0: use the knowledge-base width

  void validate() const;
};

}  // namespace sgvqa::models
