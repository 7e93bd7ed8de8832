#pragma once

#include <string>
#include <vector>

#include "sgvqa/models/types.hpp"
#include "sgvqa/nn/lstm.hpp"
#include "sgvqa/nn/params.hpp"
#include "sgvqa/nn/tape.hpp"

namespace sgvqa::models {

// Trainable question encoder for the image-feature baselines: embedding table
// plus a bidirectional LSTM whose token states are mean-pooled.
struct QuestionEncoderParams {
  nn::Parameter* embeddings = nullptr;
  nn::BiLstm lstm;

  static QuestionEncoderParams create(nn::ParamStore& store, const std::string& prefix,
                                      int vocab_size, int embedding_dim, int hidden,
                                      nn::Rng& rng);
  static QuestionEncoderParams attach(nn::ParamStore& store, const std::string& prefix,
                                      int hidden);

  struct Out {
    nn::Var token_states;  // n x 2h
    nn::Var pooled;        // 1 x 2h, mean of token states
  };
  Out run(nn::Tape& tape, const std::vector<int>& tokens) const;
};

// Two fully-connected layers, rectifier after each, fixed output width.
struct BranchMlp {
  nn::Parameter* w1 = nullptr;
  nn::Parameter* b1 = nullptr;
  nn::Parameter* w2 = nullptr;
  nn::Parameter* b2 = nullptr;

  static BranchMlp create(nn::ParamStore& store, const std::string& prefix, int in, int out,
                          nn::Rng& rng);
  static BranchMlp attach(nn::ParamStore& store, const std::string& prefix);
  nn::Var apply(nn::Tape& tape, nn::Var x) const;
};

struct ConcatParams {
  BranchMlp image_branch;  // -> hidden_dim
  BranchMlp text_branch;   // -> hidden_dim
  nn::Parameter* mix_w = nullptr;
  nn::Parameter* mix_b = nullptr;
  nn::Parameter* clf_w = nullptr;
  nn::Parameter* clf_b = nullptr;

  static ConcatParams create(nn::ParamStore& store, int image_dim, int text_dim, int hidden_dim,
                             int num_answers, nn::Rng& rng);
  static ConcatParams attach(nn::ParamStore& store);
  // image and text are b x dim batches; rows align.
  nn::Var logits(nn::Tape& tape, nn::Var image, nn::Var text) const;
};

// Single-branch variant used by the unimodal baselines.
struct UnimodalParams {
  BranchMlp branch;
  nn::Parameter* mix_w = nullptr;
  nn::Parameter* mix_b = nullptr;
  nn::Parameter* clf_w = nullptr;
  nn::Parameter* clf_b = nullptr;

  static UnimodalParams create(nn::ParamStore& store, int in_dim, int hidden_dim,
                               int num_answers, nn::Rng& rng);
  static UnimodalParams attach(nn::ParamStore& store);
  nn::Var logits(nn::Tape& tape, nn::Var x) const;
};

struct AttnParams {
  nn::Parameter* query_w = nullptr;
  nn::Parameter* query_b = nullptr;
  nn::Parameter* key_w = nullptr;
  nn::Parameter* key_b = nullptr;
  nn::Parameter* hidden_w = nullptr;
  nn::Parameter* hidden_b = nullptr;
  nn::Parameter* clf_w = nullptr;
  nn::Parameter* clf_b = nullptr;
  int attn_dim = 0;

  static AttnParams create(nn::ParamStore& store, int question_dim, int kb_dim, int attn_dim,
                           int hidden_dim, int num_answers, nn::Rng& rng);
  static AttnParams attach(nn::ParamStore& store, int attn_dim);

  struct Out {
    nn::Var logits;
    nn::Var attention;  // n x 1, masked entries exactly zero
  };
  // Scaled dot-product attention of the question projection over kb rows.
  Out forward(nn::Tape& tape, nn::Var question_pooled, nn::Var kb,
              const std::vector<uint8_t>& mask) const;
};

struct MacParams {
  MacConfig config;
  int control_dim = 0;
  int memory_dim = 0;

  nn::Parameter* q_proj_w = nullptr;  // question pooled -> control_dim
  nn::Parameter* q_proj_b = nullptr;
  nn::Parameter* cs_proj_w = nullptr;  // token states -> control_dim
  nn::Parameter* cs_proj_b = nullptr;
  std::vector<nn::Parameter*> step_w;  // per-step position-aware transforms
  std::vector<nn::Parameter*> step_b;
  nn::Parameter* ctrl_q_w = nullptr;  // [c, q_i] -> control_dim
  nn::Parameter* ctrl_q_b = nullptr;
  nn::Parameter* ctrl_attn_w = nullptr;  // control_dim -> 1
  nn::Parameter* kb_proj_w = nullptr;    // kb width -> memory_dim
  nn::Parameter* kb_proj_b = nullptr;
  nn::Parameter* read_mem_w = nullptr;   // memory interaction -> memory_dim
  nn::Parameter* read_kb_w = nullptr;    // kb passthrough -> memory_dim
  nn::Parameter* read_b = nullptr;
  nn::Parameter* read_ctrl_w = nullptr;  // control -> memory_dim
  nn::Parameter* read_attn_w = nullptr;  // memory_dim -> 1
  nn::Parameter* write_w = nullptr;      // [r, m] -> memory_dim
  nn::Parameter* write_b = nullptr;
  nn::Parameter* mem0 = nullptr;
  nn::Parameter* ctrl0 = nullptr;
  nn::Parameter* clf_w1 = nullptr;  // [m_p, q] -> classifier hidden
  nn::Parameter* clf_b1 = nullptr;
  nn::Parameter* clf_w2 = nullptr;
  nn::Parameter* clf_b2 = nullptr;

  static MacParams create(nn::ParamStore& store, const MacConfig& config, int kb_dim,
                          int question_dim, int classifier_hidden, int num_answers,
                          nn::Rng& rng);
  static MacParams attach(nn::ParamStore& store, const MacConfig& config, int kb_dim);

  struct Out {
    nn::Var logits;
    nn::Var hidden;  // pre-classifier [memory, question] row, used by late fusion
    std::vector<nn::Var> read_attention;     // one n x 1 map per step
    std::vector<nn::Var> control_attention;  // one map per step over question tokens
  };
  Out forward(nn::Tape& tape, nn::Var kb, const std::vector<uint8_t>& kb_mask,
              nn::Var question_pooled, nn::Var token_states) const;
};

struct FusionParams {
  nn::Parameter* a_w = nullptr;
  nn::Parameter* a_b = nullptr;
  nn::Parameter* b_w = nullptr;
  nn::Parameter* b_b = nullptr;
  nn::Parameter* clf_w = nullptr;
  nn::Parameter* clf_b = nullptr;

  static FusionParams create(nn::ParamStore& store, int a_dim, int b_dim, int hidden,
                             int num_answers, nn::Rng& rng);
  static FusionParams attach(nn::ParamStore& store);
  // Each branch through its own fully-connected stack, concatenated, classified.
  nn::Var logits(nn::Tape& tape, nn::Var branch_a, nn::Var branch_b) const;
};

// Cross-entropy of a single-row logits var against a target index.
nn::Var cross_entropy(nn::Tape& tape, nn::Var logits, int target);

}  // namespace sgvqa::models
