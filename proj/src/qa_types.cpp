#include "sgvqa/models/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sgvqa/util.hpp"

namespace sgvqa::models {

const std::array<SemanticType, 5>& all_semantic_types() {
  static const std::array<SemanticType, 5> types = {
      SemanticType::relation, SemanticType::attribute, SemanticType::object,
      SemanticType::category, SemanticType::global};
  return types;
}

std::string to_string(SemanticType t) {
  switch (t) {
    case SemanticType::relation: return "relation";
    case SemanticType::attribute: return "attribute";
    case SemanticType::object: return "object";
    case SemanticType::category: return "category";
    case SemanticType::global: return "global";
  }
  fail("to_string: bad SemanticType");
}

SemanticType semantic_type_from_string(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "relation" || v == "rel") return SemanticType::relation;
  if (v == "attribute" || v == "attr") return SemanticType::attribute;
  if (v == "object" || v == "obj") return SemanticType::object;
  if (v == "category" || v == "cat") return SemanticType::category;
  if (v == "global") return SemanticType::global;
  fail("semantic_type_from_string: unknown type '", s, "'");
}

AnswerVocabulary::AnswerVocabulary(std::vector<std::string> answers)
    : answers_(std::move(answers)) {
  for (size_t i = 0; i < answers_.size(); ++i) {
    auto [it, inserted] = index_.emplace(answers_[i], static_cast<int>(i));
    if (!inserted) fail("AnswerVocabulary: duplicate answer '", answers_[i], "'");
  }
}

AnswerVocabulary AnswerVocabulary::from_training_answers(
    const std::vector<std::string>& answers) {
  if (answers.empty()) fail("AnswerVocabulary: no training answers");
  std::map<std::string, int> counts;
  for (const std::string& a : answers) counts[to_lower(trim(a))]++;
  std::vector<std::pair<std::string, int>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> list;
  list.reserve(ordered.size());
  for (auto& [a, n] : ordered) list.push_back(a);
  return AnswerVocabulary(std::move(list));
}

int AnswerVocabulary::lookup(const std::string& answer) const {
  auto it = index_.find(to_lower(trim(answer)));
  return it == index_.end() ? -1 : it->second;
}

const std::string& AnswerVocabulary::answer(int id) const {
  if (id < 0 || id >= size()) fail("AnswerVocabulary::answer: id ", id, " out of range");
  return answers_[static_cast<size_t>(id)];
}

std::string AnswerVocabulary::hash() const {
  std::string joined;
  for (const std::string& a : answers_) {
    joined += a;
    joined += '\n';
  }
  return hex64(fnv1a64(joined));
}

QuestionEmbedding QuestionEmbedding::from_token_states(nn::Matrix token_states) {
  QuestionEmbedding q;
  q.pooled = token_states.colwise().mean();
  q.token_states = std::move(token_states);
  return q;
}

AnswerDistribution AnswerDistribution::from_logits(const Eigen::RowVectorXd& logits) {
  AnswerDistribution d;
  d.logits = logits;
  const double mx = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.array() - mx).exp();
  d.probabilities = e / e.sum();
  return d;
}

int AnswerDistribution::argmax() const {
  int best = 0;
  for (int i = 1; i < probabilities.size(); ++i)
    if (probabilities(i) > probabilities(best)) best = i;
  return best;
}

void MacConfig::validate() const {
  if (steps < 1) fail("MacConfig: steps must be >= 1, got ", steps);
  if (memory_dim < 0 || control_dim < 0) fail("MacConfig: negative dimension");
}

}  // namespace sgvqa::models
