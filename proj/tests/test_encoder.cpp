#include <doctest.h>

#include <vector>

#include "gradcheck.hpp"
#include "sgvqa/core/vocabulary.hpp"
#include "sgvqa/encoder/encoder.hpp"

using namespace sgvqa;
using core::SceneGraph;
using encoder::EncoderConfig;
using encoder::EncoderParams;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

struct TinyWorld {
  core::Vocabulary vocab;
  nn::ParamStore store;
  EncoderParams params;
  EncoderConfig config;

  static TinyWorld make(uint64_t seed, int d = 4, int iterations = 2) {
    TinyWorld w;
    SceneGraph g;
    g.image_id = "t";
    g.nodes = {{"cat", {"small", "black"}, {}, {}},
               {"table", {"wooden"}, {}, {}},
               {"lamp", {}, {}, {}}};
    w.vocab = core::build_vocabulary({g}, {"what is on the table ?"}, 1);
    w.config = EncoderConfig{.embedding_dim = 3,
                             .lstm_hidden = 2,
                             .state_dim = d,
                             .mlp_hidden = 5,
                             .iterations = iterations};
    nn::Rng rng(seed);
    w.params = EncoderParams::create(w.store, w.config, w.vocab.size(), rng);
    return w;
  }
};

SceneGraph tiny_graph() {
  SceneGraph g;
  g.image_id = "t";
  g.nodes = {{"cat", {"small"}, {}, {}}, {"table", {"wooden"}, {}, {}}, {"lamp", {}, {}, {}}};
  g.edges = {{"on", 0, 1, {}}, {"near", 2, 1, {}}};
  return g;
}

// Plain-loop reimplementation of the message passing rounds, kept free of
// Eigen and the tape so it is an independent route to the same numbers.
namespace oracle {

using Vec = std::vector<double>;

Vec mlp2(const encoder::Mlp2& m, const Vec& x) {
  const auto& w1 = m.w1->value;
  const auto& b1 = m.b1->value;
  const auto& w2 = m.w2->value;
  const auto& b2 = m.b2->value;
  Vec h(static_cast<size_t>(w1.cols()), 0.0);
  for (int j = 0; j < w1.cols(); ++j) {
    double s = b1(0, j);
    for (int i = 0; i < w1.rows(); ++i) s += x[static_cast<size_t>(i)] * w1(i, j);
    h[static_cast<size_t>(j)] = s > 0.0 ? s : 0.0;
  }
  Vec y(static_cast<size_t>(w2.cols()), 0.0);
  for (int j = 0; j < w2.cols(); ++j) {
    double s = b2(0, j);
    for (int i = 0; i < w2.rows(); ++i) s += h[static_cast<size_t>(i)] * w2(i, j);
    y[static_cast<size_t>(j)] = s;
  }
  return y;
}

Vec concat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const Vec& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

struct State {
  std::vector<Vec> edges;
  std::vector<Vec> nodes;
  Vec global;
  std::vector<int> sources;
  std::vector<int> receivers;
};

State run(State s, const EncoderParams& p, int iterations) {
  const size_t d = s.global.size();
  for (int t = 0; t < iterations; ++t) {
    std::vector<Vec> new_edges(s.edges.size());
    for (size_t k = 0; k < s.edges.size(); ++k)
      new_edges[k] = mlp2(p.edge_update,
                          concat({s.edges[k], s.nodes[static_cast<size_t>(s.receivers[k])],
                                  s.nodes[static_cast<size_t>(s.sources[k])], s.global}));

    std::vector<Vec> new_nodes(s.nodes.size());
    for (size_t i = 0; i < s.nodes.size(); ++i) {
      Vec mean(d, 0.0);
      int count = 0;
      for (size_t k = 0; k < new_edges.size(); ++k)
        if (s.receivers[k] == static_cast<int>(i)) {
          for (size_t c = 0; c < d; ++c) mean[c] += new_edges[k][c];
          ++count;
        }
      if (count > 0)
        for (size_t c = 0; c < d; ++c) mean[c] /= count;
      new_nodes[i] = mlp2(p.node_update, concat({mean, s.nodes[i], s.global}));
    }

    Vec edge_mean(d, 0.0), node_mean(d, 0.0);
    for (const Vec& e : new_edges)
      for (size_t c = 0; c < d; ++c) edge_mean[c] += e[c];
    if (!new_edges.empty())
      for (size_t c = 0; c < d; ++c) edge_mean[c] /= static_cast<double>(new_edges.size());
    for (const Vec& v : new_nodes)
      for (size_t c = 0; c < d; ++c) node_mean[c] += v[c];
    for (size_t c = 0; c < d; ++c) node_mean[c] /= static_cast<double>(new_nodes.size());
    s.global = mlp2(p.global_update, concat({edge_mean, node_mean, s.global}));
    s.edges = std::move(new_edges);
    s.nodes = std::move(new_nodes);
  }
  return s;
}

}  // namespace oracle

std::vector<double> row_of(const Matrix& m, int r) {
  std::vector<double> out(static_cast<size_t>(m.cols()));
  for (int c = 0; c < m.cols(); ++c) out[static_cast<size_t>(c)] = m(r, c);
  return out;
}

}  // namespace

TEST_CASE("encoder config defaults follow the reference setup") {
  EncoderConfig c;
  CHECK(c.mlp_hidden == 512);
  CHECK(c.iterations == 3);
  CHECK(c.state_dim == 300);
  CHECK(c.lstm_hidden == 150);
  CHECK(c.embedding_dim == 300);
}

TEST_CASE("gn_iterate matches the straight-line oracle on a 2-node 1-edge graph") {
  TinyWorld w = TinyWorld::make(99, 2);

  encoder::GraphState s;
  s.node_vectors = Matrix(2, 2);
  s.node_vectors << 0.3, -0.7, 1.1, 0.4;
  s.edge_vectors = Matrix(1, 2);
  s.edge_vectors << -0.2, 0.9;
  s.global = Matrix(1, 2);
  s.global << 0.5, -0.1;
  s.sources = {0};
  s.receivers = {1};

  // the oracle requires d=2 params
  TinyWorld w2 = TinyWorld::make(99, 2);
  oracle::State os;
  os.nodes = {row_of(s.node_vectors, 0), row_of(s.node_vectors, 1)};
  os.edges = {row_of(s.edge_vectors, 0)};
  os.global = row_of(s.global, 0);
  os.sources = s.sources;
  os.receivers = s.receivers;

  for (int iterations : {1, 2, 3}) {
    encoder::GraphState got = encoder::gn_iterate(s, w2.params, iterations);
    oracle::State want = oracle::run(os, w2.params, iterations);
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 2; ++c)
        CHECK(got.node_vectors(i, c) == doctest::Approx(want.nodes[i][c]).epsilon(1e-6));
    for (int c = 0; c < 2; ++c) {
      CHECK(got.edge_vectors(0, c) == doctest::Approx(want.edges[0][c]).epsilon(1e-6));
      CHECK(got.global(0, c) == doctest::Approx(want.global[c]).epsilon(1e-6));
    }
  }
}

TEST_CASE("gn_iterate matches the oracle on a larger random graph") {
  TinyWorld w = TinyWorld::make(3, 4, 2);
  nn::Rng rng(17);
  encoder::GraphState s;
  const int nv = 5, ne = 7, d = 4;
  s.node_vectors = Matrix(nv, d);
  s.edge_vectors = Matrix(ne, d);
  s.global = Matrix(1, d);
  for (int i = 0; i < nv; ++i)
    for (int c = 0; c < d; ++c) s.node_vectors(i, c) = rng.normal();
  for (int k = 0; k < ne; ++k)
    for (int c = 0; c < d; ++c) s.edge_vectors(k, c) = rng.normal();
  for (int c = 0; c < d; ++c) s.global(0, c) = rng.normal();
  for (int k = 0; k < ne; ++k) {
    s.sources.push_back(rng.uniform_index(nv));
    s.receivers.push_back(rng.uniform_index(nv));
  }

  oracle::State os;
  for (int i = 0; i < nv; ++i) os.nodes.push_back(row_of(s.node_vectors, i));
  for (int k = 0; k < ne; ++k) os.edges.push_back(row_of(s.edge_vectors, k));
  os.global = row_of(s.global, 0);
  os.sources = s.sources;
  os.receivers = s.receivers;

  encoder::GraphState got = encoder::gn_iterate(s, w.params, 2);
  oracle::State want = oracle::run(os, w.params, 2);
  for (int i = 0; i < nv; ++i)
    for (int c = 0; c < d; ++c)
      CHECK(got.node_vectors(i, c) == doctest::Approx(want.nodes[i][c]).epsilon(1e-9));
}

TEST_CASE("a node with no incoming edges aggregates the exact zero vector") {
  TinyWorld w = TinyWorld::make(5, 3);
  // single node, no edges: update input must be [0, v, u]
  encoder::GraphState s;
  s.node_vectors = Matrix(1, 3);
  s.node_vectors << 0.2, -0.4, 0.6;
  s.edge_vectors = Matrix(0, 3);
  s.global = Matrix(1, 3);
  s.global << 0.1, 0.2, 0.3;

  encoder::GraphState out = encoder::gn_iterate(s, w.params, 1);

  oracle::State os;
  os.nodes = {row_of(s.node_vectors, 0)};
  os.global = row_of(s.global, 0);
  oracle::State want = oracle::run(os, w.params, 1);
  for (int c = 0; c < 3; ++c)
    CHECK(out.node_vectors(0, c) == doctest::Approx(want.nodes[0][c]).epsilon(1e-12));
}

TEST_CASE("embed_graph handles zero-attribute nodes and is per-node") {
  TinyWorld w = TinyWorld::make(21);
  SceneGraph g = tiny_graph();
  std::vector<int> q = w.vocab.encode({"what", "is", "on", "the", "table"});
  encoder::GraphState s = encoder::embed_graph(g, q, w.vocab, w.params);
  CHECK(s.node_vectors.rows() == 3);
  CHECK(s.node_vectors.allFinite());

  SUBCASE("permuting node order permutes node vectors identically") {
    SceneGraph p = g;
    std::swap(p.nodes[0], p.nodes[2]);
    for (auto& e : p.edges) {
      auto remap = [](int i) { return i == 0 ? 2 : (i == 2 ? 0 : i); };
      e.source = remap(e.source);
      e.receiver = remap(e.receiver);
    }
    encoder::GraphState sp = encoder::embed_graph(p, q, w.vocab, w.params);
    CHECK(sp.node_vectors.row(0) == s.node_vectors.row(2));
    CHECK(sp.node_vectors.row(2) == s.node_vectors.row(0));
    CHECK(sp.global == s.global);
  }
  SUBCASE("question token out of range is an error") {
    std::vector<int> bad = {0, w.vocab.size()};
    CHECK_THROWS(encoder::embed_graph(g, bad, w.vocab, w.params));
  }
  SUBCASE("deterministic across reruns") {
    encoder::GraphState s2 = encoder::embed_graph(g, q, w.vocab, w.params);
    CHECK(s2.node_vectors == s.node_vectors);
    CHECK(s2.global == s.global);
  }
}

TEST_CASE("encode stacks node vectors then the global vector") {
  TinyWorld w = TinyWorld::make(31);
  SceneGraph g = tiny_graph();
  g.nodes.push_back({"cat", {}, {}, {}});
  g.nodes.push_back({"sky", {}, {}, {}});
  std::vector<int> q = w.vocab.encode({"what", "is", "this"});
  encoder::SgeMatrix sge = encoder::encode(g, q, w.vocab, w.params);
  CHECK(sge.rows.rows() == g.node_count() + 1);
  CHECK(sge.mask.size() == static_cast<size_t>(g.node_count() + 1));

  SUBCASE("permutation equivariance of rows, invariance of the global row") {
    std::vector<int> perm = {3, 0, 4, 1, 2};  // new index of old node i
    SceneGraph p;
    p.image_id = g.image_id;
    p.nodes.resize(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) p.nodes[static_cast<size_t>(perm[i])] = g.nodes[i];
    p.edges = g.edges;
    for (auto& e : p.edges) {
      e.source = perm[static_cast<size_t>(e.source)];
      e.receiver = perm[static_cast<size_t>(e.receiver)];
    }
    encoder::SgeMatrix psge = encoder::encode(p, q, w.vocab, w.params);
    const int nv = g.node_count();
    for (int i = 0; i < nv; ++i)
      for (int c = 0; c < sge.rows.cols(); ++c)
        CHECK(psge.rows(perm[static_cast<size_t>(i)], c) ==
              doctest::Approx(sge.rows(i, c)).epsilon(1e-5));
    for (int c = 0; c < sge.rows.cols(); ++c)
      CHECK(psge.rows(nv, c) == doctest::Approx(sge.rows(nv, c)).epsilon(1e-5));
  }
}

TEST_CASE("after one iteration a node depends only on its incoming neighborhood") {
  TinyWorld w = TinyWorld::make(41);
  SceneGraph g = tiny_graph();  // lamp (node 2) -> table; cat -> table; no edges into cat or lamp
  std::vector<int> q = w.vocab.encode({"what", "is", "on", "the", "table"});

  SceneGraph altered = g;
  altered.nodes[2].name = "cat";  // change the text of a node with no edges into node 0

  encoder::GraphState a = encoder::embed_graph(g, q, w.vocab, w.params);
  encoder::GraphState b = encoder::embed_graph(altered, q, w.vocab, w.params);
  encoder::GraphState a1 = encoder::gn_iterate(a, w.params, 1);
  encoder::GraphState b1 = encoder::gn_iterate(b, w.params, 1);
  // node 0 has no incoming edges at all; node 2's text cannot reach it in one round
  CHECK(a1.node_vectors.row(0) == b1.node_vectors.row(0));
}

TEST_CASE("encoder gradients match central finite differences") {
  TinyWorld w = TinyWorld::make(77, 3, 2);
  SceneGraph g = tiny_graph();
  std::vector<int> q = w.vocab.encode({"what", "is", "on", "the", "table"});

  Matrix probe(4, 3);
  nn::Rng rng(5);
  for (int r = 0; r < probe.rows(); ++r)
    for (int c = 0; c < probe.cols(); ++c) probe(r, c) = rng.normal();

  auto res = sgvqa::testing::gradcheck(
      w.store,
      [&](Tape& t) {
        encoder::SgeVar sge = encoder::encode(t, g, q, w.vocab, w.params);
        return t.sum_all(t.mul(sge.rows, t.constant(probe)));
      },
      1e-5, 1e-3);
  INFO(res.worst_entry, " rel err ", res.worst_rel_error);
  CHECK(res.ok);
  CHECK(res.checked > 300);
}
