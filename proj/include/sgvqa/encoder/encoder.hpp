#pragma once

#include <string>
#include <vector>

#include "sgvqa/core/scene_graph.hpp"
#include "sgvqa/core/vocabulary.hpp"
#include "sgvqa/nn/lstm.hpp"
#include "sgvqa/nn/params.hpp"
#include "sgvqa/nn/tape.hpp"

namespace sgvqa::encoder {

struct EncoderConfig {
  int embedding_dim = 300;
  int lstm_hidden = 150;  // per direction
  int state_dim = 300;    // width of edge, node and global vectors
  int mlp_hidden = 512;
  int iterations = 3;
  bool share_sequence_encoder = true;

  void validate() const;
};

// Two fully-connected layers with a rectifier between them.
struct Mlp2 {
  nn::Parameter* w1 = nullptr;
  nn::Parameter* b1 = nullptr;
  nn::Parameter* w2 = nullptr;
  nn::Parameter* b2 = nullptr;

  static Mlp2 create(nn::ParamStore& store, const std::string& prefix, int in, int hidden,
                     int out, nn::Rng& rng);
  static Mlp2 attach(nn::ParamStore& store, const std::string& prefix);
  nn::Var apply(nn::Tape& tape, nn::Var x) const;
};

struct EncoderParams {
  EncoderConfig config;
  nn::Parameter* embeddings = nullptr;  // vocab x embedding_dim
  nn::BiLstm sequence;                  // shared across node, edge and question text
  nn::BiLstm sequence_aux;              // used for node/edge text when not shared
  nn::Parameter* proj_w = nullptr;      // 2h -> d
  nn::Parameter* proj_b = nullptr;
  Mlp2 edge_update;    // 4d -> mlp_hidden -> d
  Mlp2 node_update;    // 3d -> mlp_hidden -> d
  Mlp2 global_update;  // 3d -> mlp_hidden -> d

  static EncoderParams create(nn::ParamStore& store, const EncoderConfig& config,
                              int vocab_size, nn::Rng& rng);
  static EncoderParams attach(nn::ParamStore& store, const EncoderConfig& config);

  // Overwrites embedding rows for tokens found in a pretrained vector file
  // (one "token v1 v2 ..." line per token). Returns the number of rows set.
  int load_pretrained_embeddings(const std::string& path, const core::Vocabulary& vocab);
};

// Per-iteration graph state: edge and node vectors plus the global vector,
// with edge endpoints carried alongside.
struct GraphState {
  nn::Matrix edge_vectors;  // Ne x d
  nn::Matrix node_vectors;  // Nv x d
  nn::Matrix global;        // 1 x d
  std::vector<int> sources;
  std::vector<int> receivers;
};

struct GraphStateVar {
  nn::Var edges;
  nn::Var nodes;
  nn::Var global;
  std::vector<int> sources;
  std::vector<int> receivers;
};

// Node rows then the global row; mask marks live rows for batched consumers.
struct SgeMatrix {
  nn::Matrix rows;  // (Nv + 1) x d
  std::vector<uint8_t> mask;
};

struct SgeVar {
  nn::Var rows;
  std::vector<uint8_t> mask;
};

// Question text through the sequence encoder. `projected` is the 1 x d
// global-vector input; token states feed attention-based answer heads.
struct QuestionEncoding {
  nn::Var token_states;  // n x 2h
  nn::Var final_state;   // 1 x 2h
  nn::Var projected;     // 1 x d
};

QuestionEncoding encode_question(nn::Tape& tape, const std::vector<int>& question_ids,
                                 const core::Vocabulary& vocab, const EncoderParams& params);

// Text embedding stage: each node's name+attribute words, each edge's
// relation words and the question tokens run through the shared sequence
// encoder; final states projected to d become v_i, e_j and u.
GraphStateVar embed_graph(nn::Tape& tape, const core::SceneGraph& g,
                          const std::vector<int>& question_ids, const core::Vocabulary& vocab,
                          const EncoderParams& params);
GraphStateVar embed_graph(nn::Tape& tape, const core::SceneGraph& g,
                          const QuestionEncoding& question, const core::Vocabulary& vocab,
                          const EncoderParams& params);

// Message-passing rounds: all edges, then all nodes, then the global vector,
// each phase reading the previous phase's outputs. Mean over an empty set is
// the zero vector.
GraphStateVar gn_iterate(nn::Tape& tape, GraphStateVar state, const EncoderParams& params,
                         int iterations);

SgeVar encode(nn::Tape& tape, const core::SceneGraph& g, const std::vector<int>& question_ids,
              const core::Vocabulary& vocab, const EncoderParams& params);

// Value-level wrappers that run a private tape.
GraphState embed_graph(const core::SceneGraph& g, const std::vector<int>& question_ids,
                       const core::Vocabulary& vocab, const EncoderParams& params);
GraphState gn_iterate(const GraphState& state, const EncoderParams& params, int iterations);
SgeMatrix encode(const core::SceneGraph& g, const std::vector<int>& question_ids,
                 const core::Vocabulary& vocab, const EncoderParams& params);

}  // namespace sgvqa::encoder
