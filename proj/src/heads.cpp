#include "sgvqa/models/heads.hpp"

#include <cmath>

#include "sgvqa/util.hpp"

namespace sgvqa::models {

using nn::Tape;
using nn::Var;

QuestionEncoderParams QuestionEncoderParams::create(nn::ParamStore& store,
                                                    const std::string& prefix, int vocab_size,
                                                    int embedding_dim, int hidden,
                                                    nn::Rng& rng) {
  QuestionEncoderParams p;
  p.embeddings = &store.add_uniform(prefix + ".embeddings", vocab_size, embedding_dim, -0.1,
                                    0.1, rng);
  p.lstm = nn::BiLstm::create(store, prefix + ".lstm", embedding_dim, hidden, rng);
  return p;
}

QuestionEncoderParams QuestionEncoderParams::attach(nn::ParamStore& store,
                                                    const std::string& prefix, int hidden) {
  QuestionEncoderParams p;
  p.embeddings = &store.at(prefix + ".embeddings");
  p.lstm = nn::BiLstm::attach(store, prefix + ".lstm", hidden);
  return p;
}

QuestionEncoderParams::Out QuestionEncoderParams::run(Tape& tape,
                                                      const std::vector<int>& tokens) const {
  if (tokens.empty()) fail("QuestionEncoder: empty token sequence");
  Var emb = tape.lookup_rows(*embeddings, tokens);
  nn::BiLstm::Output lstm_out = lstm.run(tape, emb);
  Out out;
  out.token_states = lstm_out.token_states;
  out.pooled = tape.mean_rows(lstm_out.token_states);
  return out;
}

BranchMlp BranchMlp::create(nn::ParamStore& store, const std::string& prefix, int in, int out,
                            nn::Rng& rng) {
  BranchMlp m;
  m.w1 = &store.add_glorot(prefix + ".w1", in, out, rng);
  m.b1 = &store.add(prefix + ".b1", 1, out);
  m.w2 = &store.add_glorot(prefix + ".w2", out, out, rng);
  m.b2 = &store.add(prefix + ".b2", 1, out);
  return m;
}

BranchMlp BranchMlp::attach(nn::ParamStore& store, const std::string& prefix) {
  BranchMlp m;
  m.w1 = &store.at(prefix + ".w1");
  m.b1 = &store.at(prefix + ".b1");
  m.w2 = &store.at(prefix + ".w2");
  m.b2 = &store.at(prefix + ".b2");
  return m;
}

Var BranchMlp::apply(Tape& tape, Var x) const {
  return tape.relu(tape.linear(tape.relu(tape.linear(x, *w1, *b1)), *w2, *b2));
}

ConcatParams ConcatParams::create(nn::ParamStore& store, int image_dim, int text_dim,
                                  int hidden_dim, int num_answers, nn::Rng& rng) {
  ConcatParams p;
  p.image_branch = BranchMlp::create(store, "concat.image", image_dim, hidden_dim, rng);
  p.text_branch = BranchMlp::create(store, "concat.text", text_dim, hidden_dim, rng);
  p.mix_w = &store.add_glorot("concat.mix_w", 2 * hidden_dim, hidden_dim, rng);
  p.mix_b = &store.add("concat.mix_b", 1, hidden_dim);
  p.clf_w = &store.add_glorot("concat.clf_w", hidden_dim, num_answers, rng);
  p.clf_b = &store.add("concat.clf_b", 1, num_answers);
  return p;
}

ConcatParams ConcatParams::attach(nn::ParamStore& store) {
  ConcatParams p;
  p.image_branch = BranchMlp::attach(store, "concat.image");
  p.text_branch = BranchMlp::attach(store, "concat.text");
  p.mix_w = &store.at("concat.mix_w");
  p.mix_b = &store.at("concat.mix_b");
  p.clf_w = &store.at("concat.clf_w");
  p.clf_b = &store.at("concat.clf_b");
  return p;
}

Var ConcatParams::logits(Tape& tape, Var image, Var text) const {
  Var img_h = image_branch.apply(tape, image);
  Var txt_h = text_branch.apply(tape, text);
  Var mixed = tape.relu(tape.linear(tape.concat_cols({img_h, txt_h}), *mix_w, *mix_b));
  return tape.linear(mixed, *clf_w, *clf_b);
}

UnimodalParams UnimodalParams::create(nn::ParamStore& store, int in_dim, int hidden_dim,
                                      int num_answers, nn::Rng& rng) {
  UnimodalParams p;
  p.branch = BranchMlp::create(store, "unimodal.branch", in_dim, hidden_dim, rng);
  p.mix_w = &store.add_glorot("unimodal.mix_w", hidden_dim, hidden_dim, rng);
  p.mix_b = &store.add("unimodal.mix_b", 1, hidden_dim);
  p.clf_w = &store.add_glorot("unimodal.clf_w", hidden_dim, num_answers, rng);
  p.clf_b = &store.add("unimodal.clf_b", 1, num_answers);
  return p;
}

UnimodalParams UnimodalParams::attach(nn::ParamStore& store) {
  UnimodalParams p;
  p.branch = BranchMlp::attach(store, "unimodal.branch");
  p.mix_w = &store.at("unimodal.mix_w");
  p.mix_b = &store.at("unimodal.mix_b");
  p.clf_w = &store.at("unimodal.clf_w");
  p.clf_b = &store.at("unimodal.clf_b");
  return p;
}

Var UnimodalParams::logits(Tape& tape, Var x) const {
  Var h = branch.apply(tape, x);
  Var mixed = tape.relu(tape.linear(h, *mix_w, *mix_b));
  return tape.linear(mixed, *clf_w, *clf_b);
}

AttnParams AttnParams::create(nn::ParamStore& store, int question_dim, int kb_dim, int attn_dim,
                              int hidden_dim, int num_answers, nn::Rng& rng) {
  AttnParams p;
  p.attn_dim = attn_dim;
  p.query_w = &store.add_glorot("attn.query_w", question_dim, attn_dim, rng);
  p.query_b = &store.add("attn.query_b", 1, attn_dim);
  p.key_w = &store.add_glorot("attn.key_w", kb_dim, attn_dim, rng);
  p.key_b = &store.add("attn.key_b", 1, attn_dim);
  p.hidden_w = &store.add_glorot("attn.hidden_w", attn_dim + question_dim, hidden_dim, rng);
  p.hidden_b = &store.add("attn.hidden_b", 1, hidden_dim);
  p.clf_w = &store.add_glorot("attn.clf_w", hidden_dim, num_answers, rng);
  p.clf_b = &store.add("attn.clf_b", 1, num_answers);
  return p;
}

AttnParams AttnParams::attach(nn::ParamStore& store, int attn_dim) {
  AttnParams p;
  p.attn_dim = attn_dim;
  p.query_w = &store.at("attn.query_w");
  p.query_b = &store.at("attn.query_b");
  p.key_w = &store.at("attn.key_w");
  p.key_b = &store.at("attn.key_b");
  p.hidden_w = &store.at("attn.hidden_w");
  p.hidden_b = &store.at("attn.hidden_b");
  p.clf_w = &store.at("attn.clf_w");
  p.clf_b = &store.at("attn.clf_b");
  return p;
}

AttnParams::Out AttnParams::forward(Tape& tape, Var question_pooled, Var kb,
                                    const std::vector<uint8_t>& mask) const {
  if (mask.size() != static_cast<size_t>(kb.rows()))
    fail("attn: mask length ", mask.size(), " vs kb rows ", kb.rows());
  bool any = false;
  for (uint8_t m : mask) any = any || m;
  if (!any) fail("attn: no attendable rows, the knowledge base is fully masked");

  Var query = tape.linear(question_pooled, *query_w, *query_b);  // 1 x a
  Var keys = tape.linear(kb, *key_w, *key_b);                    // n x a
  Var scores = tape.scale(tape.matmul(keys, tape.transpose(query)),
                          1.0 / std::sqrt(static_cast<double>(attn_dim)));
  Var weights = tape.masked_softmax_col(scores, mask);
  Var attended = tape.matmul(tape.transpose(weights), keys);  // 1 x a
  Var hidden = tape.relu(
      tape.linear(tape.concat_cols({attended, question_pooled}), *hidden_w, *hidden_b));
  Out out;
  out.logits = tape.linear(hidden, *clf_w, *clf_b);
  out.attention = weights;
  return out;
}

MacParams MacParams::create(nn::ParamStore& store, const MacConfig& config, int kb_dim,
                            int question_dim, int classifier_hidden, int num_answers,
                            nn::Rng& rng) {
  config.validate();
  MacParams p;
  p.config = config;
  p.control_dim = config.control_dim > 0 ? config.control_dim : kb_dim;
  p.memory_dim = config.memory_dim > 0 ? config.memory_dim : kb_dim;
  const int cd = p.control_dim, md = p.memory_dim;

  p.q_proj_w = &store.add_glorot("mac.q_proj_w", question_dim, cd, rng);
  p.q_proj_b = &store.add("mac.q_proj_b", 1, cd);
  p.cs_proj_w = &store.add_glorot("mac.cs_proj_w", question_dim, cd, rng);
  p.cs_proj_b = &store.add("mac.cs_proj_b", 1, cd);
  for (int s = 0; s < config.steps; ++s) {
    p.step_w.push_back(&store.add_glorot("mac.step" + std::to_string(s) + "_w", cd, cd, rng));
    p.step_b.push_back(&store.add("mac.step" + std::to_string(s) + "_b", 1, cd));
  }
  p.ctrl_q_w = &store.add_glorot("mac.ctrl_q_w", 2 * cd, cd, rng);
  p.ctrl_q_b = &store.add("mac.ctrl_q_b", 1, cd);
  p.ctrl_attn_w = &store.add_glorot("mac.ctrl_attn_w", cd, 1, rng);
  p.kb_proj_w = &store.add_glorot("mac.kb_proj_w", kb_dim, md, rng);
  p.kb_proj_b = &store.add("mac.kb_proj_b", 1, md);
  p.read_mem_w = &store.add_glorot("mac.read_mem_w", md, md, rng);
  p.read_kb_w = &store.add_glorot("mac.read_kb_w", md, md, rng);
  p.read_b = &store.add("mac.read_b", 1, md);
  p.read_ctrl_w = &store.add_glorot("mac.read_ctrl_w", cd, md, rng);
  p.read_attn_w = &store.add_glorot("mac.read_attn_w", md, 1, rng);
  p.write_w = &store.add_glorot("mac.write_w", 2 * md, md, rng);
  p.write_b = &store.add("mac.write_b", 1, md);
  p.mem0 = &store.add_uniform("mac.mem0", 1, md, -0.1, 0.1, rng);
  p.ctrl0 = &store.add_uniform("mac.ctrl0", 1, cd, -0.1, 0.1, rng);
  p.clf_w1 = &store.add_glorot("mac.clf_w1", md + cd, classifier_hidden, rng);
  p.clf_b1 = &store.add("mac.clf_b1", 1, classifier_hidden);
  p.clf_w2 = &store.add_glorot("mac.clf_w2", classifier_hidden, num_answers, rng);
  p.clf_b2 = &store.add("mac.clf_b2", 1, num_answers);
  return p;
}

MacParams MacParams::attach(nn::ParamStore& store, const MacConfig& config, int kb_dim) {
  MacParams p;
  p.config = config;
  p.control_dim = config.control_dim > 0 ? config.control_dim : kb_dim;
  p.memory_dim = config.memory_dim > 0 ? config.memory_dim : kb_dim;
  p.q_proj_w = &store.at("mac.q_proj_w");
  p.q_proj_b = &store.at("mac.q_proj_b");
  p.cs_proj_w = &store.at("mac.cs_proj_w");
  p.cs_proj_b = &store.at("mac.cs_proj_b");
  for (int s = 0; s < config.steps; ++s) {
    p.step_w.push_back(&store.at("mac.step" + std::to_string(s) + "_w"));
    p.step_b.push_back(&store.at("mac.step" + std::to_string(s) + "_b"));
  }
  p.ctrl_q_w = &store.at("mac.ctrl_q_w");
  p.ctrl_q_b = &store.at("mac.ctrl_q_b");
  p.ctrl_attn_w = &store.at("mac.ctrl_attn_w");
  p.kb_proj_w = &store.at("mac.kb_proj_w");
  p.kb_proj_b = &store.at("mac.kb_proj_b");
  p.read_mem_w = &store.at("mac.read_mem_w");
  p.read_kb_w = &store.at("mac.read_kb_w");
  p.read_b = &store.at("mac.read_b");
  p.read_ctrl_w = &store.at("mac.read_ctrl_w");
  p.read_attn_w = &store.at("mac.read_attn_w");
  p.write_w = &store.at("mac.write_w");
  p.write_b = &store.at("mac.write_b");
  p.mem0 = &store.at("mac.mem0");
  p.ctrl0 = &store.at("mac.ctrl0");
  p.clf_w1 = &store.at("mac.clf_w1");
  p.clf_b1 = &store.at("mac.clf_b1");
  p.clf_w2 = &store.at("mac.clf_w2");
  p.clf_b2 = &store.at("mac.clf_b2");
  return p;
}

MacParams::Out MacParams::forward(Tape& tape, Var kb, const std::vector<uint8_t>& kb_mask,
                                  Var question_pooled, Var token_states) const {
  if (kb_mask.size() != static_cast<size_t>(kb.rows()))
    fail("mac: kb mask length ", kb_mask.size(), " vs kb rows ", kb.rows());
  bool any = false;
  for (uint8_t m : kb_mask) any = any || m;
  if (!any) fail("mac: knowledge base is empty after masking");

  const int n_kb = kb.rows();
  const int n_tok = token_states.rows();
  const std::vector<uint8_t> token_mask(static_cast<size_t>(n_tok), 1);

  Var q = tape.linear(question_pooled, *q_proj_w, *q_proj_b);    // 1 x cd
  Var cs = tape.linear(token_states, *cs_proj_w, *cs_proj_b);    // n_tok x cd
  Var kbp = tape.linear(kb, *kb_proj_w, *kb_proj_b);             // n_kb x md
  Var memory = tape.param(*mem0);
  Var control = tape.param(*ctrl0);

  Out out;
  for (int s = 0; s < config.steps; ++s) {
    // Control: attend over question token states.
    Var q_step = tape.linear(q, *step_w[static_cast<size_t>(s)], *step_b[static_cast<size_t>(s)]);
    Var cq = tape.linear(tape.concat_cols({control, q_step}), *ctrl_q_w, *ctrl_q_b);
    Var ctrl_scores = tape.matmul(tape.mul(cs, tape.repeat_row(cq, n_tok)),
                                  tape.param(*ctrl_attn_w));  // n_tok x 1
    Var ctrl_weights = tape.masked_softmax_col(ctrl_scores, token_mask);
    control = tape.matmul(tape.transpose(ctrl_weights), cs);  // 1 x cd

    // Read: attend over the knowledge base conditioned on control and memory.
    Var interactions = tape.mul(tape.repeat_row(memory, n_kb), kbp);  // n_kb x md
    Var read_in = tape.add_rowvec(
        tape.add(tape.matmul(interactions, tape.param(*read_mem_w)),
                 tape.matmul(kbp, tape.param(*read_kb_w))),
        tape.param(*read_b));
    Var ctrl_proj = tape.matmul(control, tape.param(*read_ctrl_w));  // 1 x md
    Var read_scores =
        tape.matmul(tape.mul(read_in, tape.repeat_row(ctrl_proj, n_kb)), tape.param(*read_attn_w));
    Var read_weights = tape.masked_softmax_col(read_scores, kb_mask);
    Var retrieved = tape.matmul(tape.transpose(read_weights), kbp);  // 1 x md

    // Write: integrate the retrieved vector into memory.
    memory = tape.linear(tape.concat_cols({retrieved, memory}), *write_w, *write_b);

    out.read_attention.push_back(read_weights);
    out.control_attention.push_back(ctrl_weights);
  }

  out.hidden = tape.concat_cols({memory, q});
  Var clf_hidden = tape.relu(tape.linear(out.hidden, *clf_w1, *clf_b1));
  out.logits = tape.linear(clf_hidden, *clf_w2, *clf_b2);
  return out;
}

FusionParams FusionParams::create(nn::ParamStore& store, int a_dim, int b_dim, int hidden,
                                  int num_answers, nn::Rng& rng) {
  FusionParams p;
  p.a_w = &store.add_glorot("fusion.a_w", a_dim, hidden, rng);
  p.a_b = &store.add("fusion.a_b", 1, hidden);
  p.b_w = &store.add_glorot("fusion.b_w", b_dim, hidden, rng);
  p.b_b = &store.add("fusion.b_b", 1, hidden);
  p.clf_w = &store.add_glorot("fusion.clf_w", 2 * hidden, num_answers, rng);
  p.clf_b = &store.add("fusion.clf_b", 1, num_answers);
  return p;
}

FusionParams FusionParams::attach(nn::ParamStore& store) {
  FusionParams p;
  p.a_w = &store.at("fusion.a_w");
  p.a_b = &store.at("fusion.a_b");
  p.b_w = &store.at("fusion.b_w");
  p.b_b = &store.at("fusion.b_b");
  p.clf_w = &store.at("fusion.clf_w");
  p.clf_b = &store.at("fusion.clf_b");
  return p;
}

Var FusionParams::logits(Tape& tape, Var branch_a, Var branch_b) const {
  Var ha = tape.relu(tape.linear(branch_a, *a_w, *a_b));
  Var hb = tape.relu(tape.linear(branch_b, *b_w, *b_b));
  return tape.linear(tape.concat_cols({ha, hb}), *clf_w, *clf_b);
}

Var cross_entropy(Tape& tape, Var logits, int target) {
  if (target < 0 || target >= logits.cols())
    fail("cross_entropy: target ", target, " outside ", logits.cols(), " answers");
  return tape.scale(tape.pick(tape.log_softmax_row(logits), 0, target), -1.0);
}

}  // namespace sgvqa::models
