#include "sgvqa/models/model.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "sgvqa/core/graph_io.hpp"
#include "sgvqa/util.hpp"

namespace sgvqa::models {

using nn::Tape;
using nn::Var;
using Json = nlohmann::json;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::concat: return "concat";
    case ModelKind::attn: return "attn";
    case ModelKind::sgatt: return "sgatt";
    case ModelKind::sgmac: return "sgmac";
    case ModelKind::text_only: return "text";
    case ModelKind::image_only: return "image";
    case ModelKind::fusion: return "fusion";
  }
  fail("to_string: bad ModelKind");
}

ModelKind model_kind_from_string(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "concat") return ModelKind::concat;
  if (v == "attn") return ModelKind::attn;
  if (v == "sgatt") return ModelKind::sgatt;
  if (v == "sgmac") return ModelKind::sgmac;
  if (v == "text" || v == "text_only") return ModelKind::text_only;
  if (v == "image" || v == "image_only") return ModelKind::image_only;
  if (v == "fusion") return ModelKind::fusion;
  fail("unknown model kind '", s, "'");
}

bool ModelConfig::uses_graphs() const {
  return kind == ModelKind::sgatt || kind == ModelKind::sgmac || kind == ModelKind::fusion;
}
bool ModelConfig::uses_object_features() const { return kind == ModelKind::attn; }
bool ModelConfig::uses_spatial() const {
  return kind == ModelKind::concat || kind == ModelKind::image_only;
}
bool ModelConfig::uses_aux() const { return kind == ModelKind::fusion; }

Json ModelConfig::to_json() const {
  return Json{{"kind", models::to_string(kind)},
              {"encoder",
               {{"embedding_dim", encoder.embedding_dim},
                {"lstm_hidden", encoder.lstm_hidden},
                {"state_dim", encoder.state_dim},
                {"mlp_hidden", encoder.mlp_hidden},
                {"iterations", encoder.iterations},
                {"share_sequence_encoder", encoder.share_sequence_encoder}}},
              {"mac",
               {{"steps", mac.steps},
                {"memory_dim", mac.memory_dim},
                {"control_dim", mac.control_dim}}},
              {"question_embedding_dim", question_embedding_dim},
              {"question_hidden", question_hidden},
              {"attn_dim", attn_dim},
              {"hidden_dim", hidden_dim},
              {"classifier_hidden", classifier_hidden},
              {"object_feature_dim", object_feature_dim},
              {"spatial_feature_dim", spatial_feature_dim},
              {"fusion_hidden", fusion_hidden},
              {"aux_dim", aux_dim},
              {"freeze_encoder", freeze_encoder}};
}

ModelConfig ModelConfig::from_json(const Json& j) {
  ModelConfig c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  const Json& e = j.at("encoder");
  c.encoder.embedding_dim = e.at("embedding_dim").get<int>();
  c.encoder.lstm_hidden = e.at("lstm_hidden").get<int>();
  c.encoder.state_dim = e.at("state_dim").get<int>();
  c.encoder.mlp_hidden = e.at("mlp_hidden").get<int>();
  c.encoder.iterations = e.at("iterations").get<int>();
  c.encoder.share_sequence_encoder = e.at("share_sequence_encoder").get<bool>();
  const Json& m = j.at("mac");
  c.mac.steps = m.at("steps").get<int>();
  c.mac.memory_dim = m.at("memory_dim").get<int>();
  c.mac.control_dim = m.at("control_dim").get<int>();
  c.question_embedding_dim = j.at("question_embedding_dim").get<int>();
  c.question_hidden = j.at("question_hidden").get<int>();
  c.attn_dim = j.at("attn_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.classifier_hidden = j.at("classifier_hidden").get<int>();
  c.object_feature_dim = j.at("object_feature_dim").get<int>();
  c.spatial_feature_dim = j.at("spatial_feature_dim").get<int>();
  c.fusion_hidden = j.at("fusion_hidden").get<int>();
  c.aux_dim = j.at("aux_dim").get<int>();
  c.freeze_encoder = j.at("freeze_encoder").get<bool>();
  return c;
}

QaModel::QaModel(ModelConfig config, core::Vocabulary vocab, AnswerVocabulary answers,
                 uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), answers_(std::move(answers)) {
  if (answers_.size() == 0) fail("QaModel: empty answer vocabulary");
  build(seed);
}

void QaModel::build(uint64_t seed) {
  nn::Rng rng(seed ^ 0x5eed0f0dull);
  const int n_ans = answers_.size();
  const int spatial_dim =
      config_.spatial_feature_dim > 0 ? config_.spatial_feature_dim : config_.object_feature_dim;

  switch (config_.kind) {
    case ModelKind::sgmac:
    case ModelKind::fusion: {
      encoder_ = encoder::EncoderParams::create(store_, config_.encoder, vocab_.size(), rng);
      const int qdim = 2 * config_.encoder.lstm_hidden;
      mac_ = MacParams::create(store_, config_.mac, config_.encoder.state_dim, qdim,
                               config_.classifier_hidden, n_ans, rng);
      if (config_.kind == ModelKind::fusion) {
        if (config_.aux_dim <= 0) fail("fusion model requires aux_dim > 0");
        fusion_ = FusionParams::create(store_, mac_->memory_dim + mac_->control_dim,
                                       config_.aux_dim, config_.fusion_hidden, n_ans, rng);
      }
      break;
    }
    case ModelKind::sgatt: {
      encoder_ = encoder::EncoderParams::create(store_, config_.encoder, vocab_.size(), rng);
      const int qdim = 2 * config_.encoder.lstm_hidden;
      attn_ = AttnParams::create(store_, qdim, config_.encoder.state_dim, config_.attn_dim,
                                 config_.classifier_hidden, n_ans, rng);
      break;
    }
    case ModelKind::attn: {
      if (config_.object_feature_dim <= 0) fail("attn model requires object_feature_dim > 0");
      question_encoder_ =
          QuestionEncoderParams::create(store_, "question", vocab_.size(),
                                        config_.question_embedding_dim, config_.question_hidden, rng);
      attn_ = AttnParams::create(store_, 2 * config_.question_hidden, config_.object_feature_dim,
                                 config_.attn_dim, config_.classifier_hidden, n_ans, rng);
      break;
    }
    case ModelKind::concat: {
      if (spatial_dim <= 0) fail("concat model requires a spatial feature dimension");
      question_encoder_ =
          QuestionEncoderParams::create(store_, "question", vocab_.size(),
                                        config_.question_embedding_dim, config_.question_hidden, rng);
      concat_ = ConcatParams::create(store_, spatial_dim, 2 * config_.question_hidden,
                                     config_.hidden_dim, n_ans, rng);
      break;
    }
    case ModelKind::text_only: {
      question_encoder_ =
          QuestionEncoderParams::create(store_, "question", vocab_.size(),
                                        config_.question_embedding_dim, config_.question_hidden, rng);
      unimodal_ = UnimodalParams::create(store_, 2 * config_.question_hidden, config_.hidden_dim,
                                         n_ans, rng);
      break;
    }
    case ModelKind::image_only: {
      if (spatial_dim <= 0) fail("image model requires a spatial feature dimension");
      unimodal_ = UnimodalParams::create(store_, spatial_dim, config_.hidden_dim, n_ans, rng);
      break;
    }
  }
}

namespace {

const core::SceneGraph& need_graph(const SampleInputs& in) {
  if (!in.graph) fail("model forward: scene graph input missing");
  return *in.graph;
}
const std::vector<int>& need_question(const SampleInputs& in) {
  if (!in.question || in.question->empty()) fail("model forward: question tokens missing");
  return *in.question;
}

}  // namespace

Var QaModel::logits(Tape& tape, const SampleInputs& in) const {
  switch (config_.kind) {
    case ModelKind::sgmac: {
      encoder::QuestionEncoding q =
          encoder::encode_question(tape, need_question(in), vocab_, *encoder_);
      encoder::GraphStateVar state = encoder::embed_graph(tape, need_graph(in), q, vocab_, *encoder_);
      state = encoder::gn_iterate(tape, std::move(state), *encoder_, config_.encoder.iterations);
      Var kb = tape.concat_rows({state.nodes, state.global});
      std::vector<uint8_t> mask(static_cast<size_t>(kb.rows()), 1);
      Var pooled = tape.mean_rows(q.token_states);
      return mac_->forward(tape, kb, mask, pooled, q.token_states).logits;
    }
    case ModelKind::fusion: {
      if (!in.aux) fail("model forward: auxiliary branch input missing");
      encoder::QuestionEncoding q =
          encoder::encode_question(tape, need_question(in), vocab_, *encoder_);
      encoder::GraphStateVar state = encoder::embed_graph(tape, need_graph(in), q, vocab_, *encoder_);
      state = encoder::gn_iterate(tape, std::move(state), *encoder_, config_.encoder.iterations);
      Var kb = tape.concat_rows({state.nodes, state.global});
      std::vector<uint8_t> mask(static_cast<size_t>(kb.rows()), 1);
      Var pooled = tape.mean_rows(q.token_states);
      MacParams::Out mac_out = mac_->forward(tape, kb, mask, pooled, q.token_states);
      return fusion_->logits(tape, mac_out.hidden, tape.constant(*in.aux));
    }
    case ModelKind::sgatt: {
      encoder::QuestionEncoding q =
          encoder::encode_question(tape, need_question(in), vocab_, *encoder_);
      encoder::GraphStateVar state = encoder::embed_graph(tape, need_graph(in), q, vocab_, *encoder_);
      state = encoder::gn_iterate(tape, std::move(state), *encoder_, config_.encoder.iterations);
      Var kb = tape.concat_rows({state.nodes, state.global});
      std::vector<uint8_t> mask(static_cast<size_t>(kb.rows()), 1);
      Var pooled = tape.mean_rows(q.token_states);
      return attn_->forward(tape, pooled, kb, mask).logits;
    }
    case ModelKind::attn: {
      if (!in.object_features || !in.object_mask)
        fail("model forward: object features or mask missing");
      QuestionEncoderParams::Out q = question_encoder_->run(tape, need_question(in));
      return attn_->forward(tape, q.pooled, tape.constant(*in.object_features), *in.object_mask)
          .logits;
    }
    case ModelKind::concat: {
      if (!in.spatial) fail("model forward: spatial feature missing");
      QuestionEncoderParams::Out q = question_encoder_->run(tape, need_question(in));
      return concat_->logits(tape, tape.constant(*in.spatial), q.pooled);
    }
    case ModelKind::text_only: {
      QuestionEncoderParams::Out q = question_encoder_->run(tape, need_question(in));
      return unimodal_->logits(tape, q.pooled);
    }
    case ModelKind::image_only: {
      if (!in.spatial) fail("model forward: spatial feature missing");
      return unimodal_->logits(tape, tape.constant(*in.spatial));
    }
  }
  fail("logits: bad ModelKind");
}

AnswerDistribution QaModel::predict(const SampleInputs& in) const {
  Tape tape;
  Var l = logits(tape, in);
  return AnswerDistribution::from_logits(Eigen::RowVectorXd(l.value().row(0)));
}

MacRun QaModel::run_mac(const SampleInputs& in) const {
  if (!mac_) fail("run_mac: model kind ", to_string(config_.kind), " has no MAC head");
  Tape tape;
  encoder::QuestionEncoding q =
      encoder::encode_question(tape, need_question(in), vocab_, *encoder_);
  encoder::GraphStateVar state = encoder::embed_graph(tape, need_graph(in), q, vocab_, *encoder_);
  state = encoder::gn_iterate(tape, std::move(state), *encoder_, config_.encoder.iterations);
  Var kb = tape.concat_rows({state.nodes, state.global});
  std::vector<uint8_t> mask(static_cast<size_t>(kb.rows()), 1);
  Var pooled = tape.mean_rows(q.token_states);
  MacParams::Out out = mac_->forward(tape, kb, mask, pooled, q.token_states);

  MacRun run;
  run.distribution = AnswerDistribution::from_logits(Eigen::RowVectorXd(out.logits.value().row(0)));
  for (const Var& a : out.read_attention) run.read_attention.push_back(a.value().col(0));
  for (const Var& a : out.control_attention) run.control_attention.push_back(a.value().col(0));
  return run;
}

bool QaModel::is_trainable(const nn::Parameter& p) const {
  if (config_.freeze_encoder && p.name.rfind("encoder.", 0) == 0) return false;
  return true;
}

void QaModel::save(const std::string& prefix) const {
  Json manifest;
  manifest["format"] = "sgvqa-checkpoint-v1";
  manifest["model"] = config_.to_json();
  manifest["vocabulary_hash"] = vocab_.hash();
  manifest["answer_vocabulary_hash"] = answers_.hash();
  Json plist = Json::array();
  for (const auto& p : store_.all())
    plist.push_back({{"name", p->name},
                     {"rows", static_cast<int>(p->value.rows())},
                     {"cols", static_cast<int>(p->value.cols())}});
  manifest["parameters"] = std::move(plist);
  manifest["blob"] = std::filesystem::path(prefix + ".bin").filename().string();
  core::write_json_file(manifest, prefix + ".json");
  nn::save_blob(store_, prefix + ".bin");
}

std::unique_ptr<QaModel> QaModel::load(const std::string& prefix, core::Vocabulary vocab,
                                       AnswerVocabulary answers) {
  const Json manifest = core::parse_json_file(prefix + ".json");
  if (manifest.value("format", "") != "sgvqa-checkpoint-v1")
    fail("checkpoint '", prefix, "': unknown format");
  if (manifest.at("vocabulary_hash").get<std::string>() != vocab.hash())
    fail("checkpoint '", prefix, "': vocabulary hash mismatch, refusing to run");
  if (manifest.at("answer_vocabulary_hash").get<std::string>() != answers.hash())
    fail("checkpoint '", prefix, "': answer vocabulary hash mismatch, refusing to run");

  ModelConfig config = ModelConfig::from_json(manifest.at("model"));
  auto model = std::make_unique<QaModel>(config, std::move(vocab), std::move(answers), 0);

  const Json& plist = manifest.at("parameters");
  const auto& params = model->store_.all();
  if (plist.size() != params.size())
    fail("checkpoint '", prefix, "': expected ", params.size(), " parameters, found ",
         plist.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const Json& rec = plist[i];
    if (rec.at("name").get<std::string>() != params[i]->name ||
        rec.at("rows").get<int>() != params[i]->value.rows() ||
        rec.at("cols").get<int>() != params[i]->value.cols())
      fail("checkpoint '", prefix, "': parameter ", i, " ('", params[i]->name,
           "') does not match the manifest");
  }
  const std::string blob =
      (std::filesystem::path(prefix).parent_path() / manifest.at("blob").get<std::string>())
          .string();
  nn::load_blob(model->store_, blob);
  return model;
}

}  // namespace sgvqa::models
