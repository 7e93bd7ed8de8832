#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

#include "sgvqa/core/vocabulary.hpp"
#include "sgvqa/encoder/encoder.hpp"
#include "sgvqa/models/heads.hpp"
#include "sgvqa/models/types.hpp"

namespace sgvqa::models {

enum class ModelKind { concat, attn, sgatt, sgmac, text_only, image_only, fusion };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::sgmac;
  encoder::EncoderConfig encoder;  // graph-based kinds
  MacConfig mac;                   // sgmac and fusion
  int question_embedding_dim = 64;  // baselines' own question encoder
  int question_hidden = 64;
  int attn_dim = 128;
  int hidden_dim = 1024;  // per-modality branch width in the concat baseline
  int classifier_hidden = 512;
  int object_feature_dim = 0;   // required by concat/attn/image_only
  int spatial_feature_dim = 0;  // 0: same as object_feature_dim
  int fusion_hidden = 256;
  int aux_dim = 0;  // external-branch width for fusion
  bool freeze_encoder = false;

  bool uses_graphs() const;
  bool uses_object_features() const;
  bool uses_spatial() const;
  bool uses_aux() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Per-sample forward inputs; only the fields a model kind consumes are read.
struct SampleInputs {
  const core::SceneGraph* graph = nullptr;
  const std::vector<int>* question = nullptr;
  const nn::Matrix* object_features = nullptr;
  const std::vector<uint8_t>* object_mask = nullptr;
  const nn::Matrix* spatial = nullptr;  // 1 x spatial_feature_dim
  const nn::Matrix* aux = nullptr;      // 1 x aux_dim
};

struct MacRun {
  AnswerDistribution distribution;
  std::vector<Eigen::VectorXd> read_attention;
  std::vector<Eigen::VectorXd> control_attention;
};

class QaModel {
 public:
  QaModel(ModelConfig config, core::Vocabulary vocab, AnswerVocabulary answers, uint64_t seed);

  nn::Var logits(nn::Tape& tape, const SampleInputs& in) const;
  AnswerDistribution predict(const SampleInputs& in) const;
  // Full per-step attention maps; only valid for kinds with a MAC head.
  MacRun run_mac(const SampleInputs& in) const;

  void save(const std::string& prefix) const;
  // Hash mismatches against the provided vocabularies are refused.
  static std::unique_ptr<QaModel> load(const std::string& prefix, core::Vocabulary vocab,
                                       AnswerVocabulary answers);

  const ModelConfig& config() const { return config_; }
  const core::Vocabulary& vocab() const { return vocab_; }
  const AnswerVocabulary& answers() const { return answers_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  // Parameters excluded from optimizer updates (frozen encoder mode).
  bool is_trainable(const nn::Parameter& p) const;

 private:
  void build(uint64_t seed);

  ModelConfig config_;
  core::Vocabulary vocab_;
  AnswerVocabulary answers_;
  nn::ParamStore store_;

  std::optional<encoder::EncoderParams> encoder_;
  std::optional<QuestionEncoderParams> question_encoder_;
  std::optional<ConcatParams> concat_;
  std::optional<UnimodalParams> unimodal_;
  std::optional<AttnParams> attn_;
  std::optional<MacParams> mac_;
  std::optional<FusionParams> fusion_;
};

}  // namespace sgvqa::models
