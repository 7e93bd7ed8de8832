#include "sgvqa/encoder/encoder.hpp"

#include <fstream>
#include <sstream>

#include "sgvqa/util.hpp"

namespace sgvqa::encoder {

using nn::Tape;
using nn::Var;

void EncoderConfig::validate() const {
  if (embedding_dim <= 0 || lstm_hidden <= 0 || state_dim <= 0 || mlp_hidden <= 0 ||
      iterations <= 0)
    fail("EncoderConfig: all dimensions and the iteration count must be positive");
}

Mlp2 Mlp2::create(nn::ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                  nn::Rng& rng) {
  Mlp2 m;
  m.w1 = &store.add_glorot(prefix + ".w1", in, hidden, rng);
  m.b1 = &store.add(prefix + ".b1", 1, hidden);
  m.w2 = &store.add_glorot(prefix + ".w2", hidden, out, rng);
  m.b2 = &store.add(prefix + ".b2", 1, out);
  return m;
}

Mlp2 Mlp2::attach(nn::ParamStore& store, const std::string& prefix) {
  Mlp2 m;
  m.w1 = &store.at(prefix + ".w1");
  m.b1 = &store.at(prefix + ".b1");
  m.w2 = &store.at(prefix + ".w2");
  m.b2 = &store.at(prefix + ".b2");
  return m;
}

Var Mlp2::apply(Tape& tape, Var x) const {
  return tape.linear(tape.relu(tape.linear(x, *w1, *b1)), *w2, *b2);
}

EncoderParams EncoderParams::create(nn::ParamStore& store, const EncoderConfig& config,
                                    int vocab_size, nn::Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  const int d = config.state_dim;
  p.embeddings =
      &store.add_uniform("encoder.embeddings", vocab_size, config.embedding_dim, -0.1, 0.1, rng);
  p.sequence = nn::BiLstm::create(store, "encoder.seq", config.embedding_dim, config.lstm_hidden, rng);
  if (!config.share_sequence_encoder)
    p.sequence_aux =
        nn::BiLstm::create(store, "encoder.seq_aux", config.embedding_dim, config.lstm_hidden, rng);
  p.proj_w = &store.add_glorot("encoder.proj_w", 2 * config.lstm_hidden, d, rng);
  p.proj_b = &store.add("encoder.proj_b", 1, d);
  p.edge_update = Mlp2::create(store, "encoder.edge_update", 4 * d, config.mlp_hidden, d, rng);
  p.node_update = Mlp2::create(store, "encoder.node_update", 3 * d, config.mlp_hidden, d, rng);
  p.global_update = Mlp2::create(store, "encoder.global_update", 3 * d, config.mlp_hidden, d, rng);
  return p;
}

EncoderParams EncoderParams::attach(nn::ParamStore& store, const EncoderConfig& config) {
  EncoderParams p;
  p.config = config;
  p.embeddings = &store.at("encoder.embeddings");
  p.sequence = nn::BiLstm::attach(store, "encoder.seq", config.lstm_hidden);
  if (!config.share_sequence_encoder)
    p.sequence_aux = nn::BiLstm::attach(store, "encoder.seq_aux", config.lstm_hidden);
  p.proj_w = &store.at("encoder.proj_w");
  p.proj_b = &store.at("encoder.proj_b");
  p.edge_update = Mlp2::attach(store, "encoder.edge_update");
  p.node_update = Mlp2::attach(store, "encoder.node_update");
  p.global_update = Mlp2::attach(store, "encoder.global_update");
  return p;
}

int EncoderParams::load_pretrained_embeddings(const std::string& path,
                                              const core::Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) fail("load_pretrained_embeddings: cannot open '", path, "'");
  int loaded = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (!vocab.contains(token)) continue;
    const int id = vocab.lookup(token);
    for (int c = 0; c < config.embedding_dim; ++c) {
      double v = 0.0;
      if (!(ls >> v))
        fail("load_pretrained_embeddings: line for '", token, "' has fewer than ",
             config.embedding_dim, " values");
      embeddings->value(id, c) = v;
    }
    ++loaded;
  }
  return loaded;
}

namespace {

// Sequence encoding of one token-id list: BiLSTM final states projected to d.
Var encode_sequence(Tape& tape, const std::vector<int>& ids, const nn::BiLstm& lstm,
                    const EncoderParams& p) {
  std::vector<int> safe = ids.empty() ? std::vector<int>{core::Vocabulary::kUnk} : ids;
  Var emb = tape.lookup_rows(*p.embeddings, std::move(safe));
  nn::BiLstm::Output out = lstm.run(tape, emb);
  return tape.linear(out.final_state, *p.proj_w, *p.proj_b);
}

void check_question_ids(const std::vector<int>& question_ids, const core::Vocabulary& vocab) {
  if (question_ids.empty()) fail("embed_graph: question token sequence is empty");
  for (int id : question_ids)
    if (id < 0 || id >= vocab.size())
      fail("embed_graph: question token id ", id, " outside vocabulary of ", vocab.size());
}

}  // namespace

QuestionEncoding encode_question(Tape& tape, const std::vector<int>& question_ids,
                                 const core::Vocabulary& vocab, const EncoderParams& params) {
  check_question_ids(question_ids, vocab);
  Var emb = tape.lookup_rows(*params.embeddings, question_ids);
  nn::BiLstm::Output out = params.sequence.run(tape, emb);
  QuestionEncoding q;
  q.token_states = out.token_states;
  q.final_state = out.final_state;
  q.projected = tape.linear(out.final_state, *params.proj_w, *params.proj_b);
  return q;
}

GraphStateVar embed_graph(Tape& tape, const core::SceneGraph& g,
                          const std::vector<int>& question_ids, const core::Vocabulary& vocab,
                          const EncoderParams& params) {
  return embed_graph(tape, g, encode_question(tape, question_ids, vocab, params), vocab, params);
}

GraphStateVar embed_graph(Tape& tape, const core::SceneGraph& g,
                          const QuestionEncoding& question, const core::Vocabulary& vocab,
                          const EncoderParams& params) {
  if (g.node_count() < 1) fail("embed_graph: graph '", g.image_id, "' has no nodes");
  g.validate();

  const nn::BiLstm& text_lstm =
      params.config.share_sequence_encoder ? params.sequence : params.sequence_aux;

  GraphStateVar state;
  std::vector<Var> node_rows(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i)
    node_rows[i] = encode_sequence(tape, vocab.encode(core::node_words(g.nodes[i])), text_lstm, params);
  state.nodes = node_rows.size() == 1 ? node_rows[0] : tape.concat_rows(node_rows);

  const int d = params.config.state_dim;
  if (g.edges.empty()) {
    state.edges = tape.zeros(0, d);
  } else {
    std::vector<Var> edge_rows(g.edges.size());
    for (size_t k = 0; k < g.edges.size(); ++k)
      edge_rows[k] = encode_sequence(
          tape, vocab.encode(split_ws(to_lower(g.edges[k].relation))), text_lstm, params);
    state.edges = edge_rows.size() == 1 ? edge_rows[0] : tape.concat_rows(edge_rows);
  }
  state.global = question.projected;

  state.sources.reserve(g.edges.size());
  state.receivers.reserve(g.edges.size());
  for (const core::RelationEdge& e : g.edges) {
    state.sources.push_back(e.source);
    state.receivers.push_back(e.receiver);
  }
  return state;
}

GraphStateVar gn_iterate(Tape& tape, GraphStateVar state, const EncoderParams& params,
                         int iterations) {
  const int num_nodes = state.nodes.rows();
  const int num_edges = state.edges.rows();
  const int d = params.config.state_dim;

  for (int t = 1; t <= iterations; ++t) {
    // Edge phase: e'_k from [e_k, v_receiver, v_source, u].
    Var updated_edges;
    if (num_edges > 0) {
      Var v_recv = tape.gather_rows(state.nodes, state.receivers);
      Var v_src = tape.gather_rows(state.nodes, state.sources);
      Var u_rows = tape.repeat_row(state.global, num_edges);
      updated_edges = params.edge_update.apply(
          tape, tape.concat_cols({state.edges, v_recv, v_src, u_rows}));
    } else {
      updated_edges = tape.zeros(0, d);
    }
    if (!tape.all_finite(updated_edges))
      fail("gn_iterate: edge update produced non-finite values at iteration ", t);

    // Node phase: v'_i from [mean of updated incoming edges, v_i, u].
    Var incoming = num_edges > 0 ? tape.segment_mean_rows(updated_edges, state.receivers, num_nodes)
                                 : tape.zeros(num_nodes, d);
    Var u_node_rows = tape.repeat_row(state.global, num_nodes);
    Var updated_nodes =
        params.node_update.apply(tape, tape.concat_cols({incoming, state.nodes, u_node_rows}));
    if (!tape.all_finite(updated_nodes))
      fail("gn_iterate: node update produced non-finite values at iteration ", t);

    // Global phase: u' from [mean of updated edges, mean of updated nodes, u].
    Var edge_mean = num_edges > 0 ? tape.mean_rows(updated_edges) : tape.zeros(1, d);
    Var node_mean = tape.mean_rows(updated_nodes);
    Var updated_global =
        params.global_update.apply(tape, tape.concat_cols({edge_mean, node_mean, state.global}));
    if (!tape.all_finite(updated_global))
      fail("gn_iterate: global update produced non-finite values at iteration ", t);

    state.edges = updated_edges;
    state.nodes = updated_nodes;
    state.global = updated_global;
  }
  return state;
}

SgeVar encode(Tape& tape, const core::SceneGraph& g, const std::vector<int>& question_ids,
              const core::Vocabulary& vocab, const EncoderParams& params) {
  GraphStateVar state = embed_graph(tape, g, question_ids, vocab, params);
  state = gn_iterate(tape, std::move(state), params, params.config.iterations);
  SgeVar sge;
  sge.rows = tape.concat_rows({state.nodes, state.global});
  sge.mask.assign(static_cast<size_t>(sge.rows.rows()), 1);
  return sge;
}

GraphState embed_graph(const core::SceneGraph& g, const std::vector<int>& question_ids,
                       const core::Vocabulary& vocab, const EncoderParams& params) {
  Tape tape;
  GraphStateVar sv = embed_graph(tape, g, question_ids, vocab, params);
  return GraphState{sv.edges.value(), sv.nodes.value(), sv.global.value(), sv.sources,
                    sv.receivers};
}

GraphState gn_iterate(const GraphState& state, const EncoderParams& params, int iterations) {
  Tape tape;
  GraphStateVar sv;
  sv.edges = tape.constant(state.edge_vectors);
  sv.nodes = tape.constant(state.node_vectors);
  sv.global = tape.constant(state.global);
  sv.sources = state.sources;
  sv.receivers = state.receivers;
  sv = gn_iterate(tape, std::move(sv), params, iterations);
  return GraphState{sv.edges.value(), sv.nodes.value(), sv.global.value(), sv.sources,
                    sv.receivers};
}

SgeMatrix encode(const core::SceneGraph& g, const std::vector<int>& question_ids,
                 const core::Vocabulary& vocab, const EncoderParams& params) {
  Tape tape;
  SgeVar sv = encode(tape, g, question_ids, vocab, params);
  return SgeMatrix{sv.rows.value(), sv.mask};
}

}  // namespace sgvqa::encoder
