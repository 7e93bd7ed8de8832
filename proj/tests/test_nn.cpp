#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "sgvqa/nn/lstm.hpp"
#include "sgvqa/nn/params.hpp"
#include "sgvqa/nn/rng.hpp"
#include "sgvqa/nn/tape.hpp"

using namespace sgvqa;
using nn::Matrix;
using nn::Tape;
using nn::Var;
using sgvqa::testing::gradcheck;

TEST_CASE("rng streams are deterministic and fork-independent") {
  nn::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  nn::Rng g1 = nn::Rng::from_key(7, "q1");
  nn::Rng g2 = nn::Rng::from_key(7, "q2");
  CHECK(g1.next_u64() != g2.next_u64());
  nn::Rng g1b = nn::Rng::from_key(7, "q1");
  CHECK(nn::Rng::from_key(7, "q1").next_u64() == g1b.next_u64());
}

TEST_CASE("rng uniform_index is in range and roughly uniform") {
  nn::Rng rng(123);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[rng.uniform_index(7)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("rng poisson has the requested mean") {
  nn::Rng rng(5);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) sum += rng.poisson(2.5);
  CHECK(sum / 20000.0 == doctest::Approx(2.5).epsilon(0.05));
}

namespace {

Matrix random_matrix(nn::Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("tape ops match finite differences") {
  nn::Rng rng(7);
  nn::ParamStore store;
  nn::Parameter& a = store.add("a", 3, 4);
  nn::Parameter& b = store.add("b", 4, 2);
  nn::Parameter& bias = store.add("bias", 1, 2);
  a.value = random_matrix(rng, 3, 4);
  b.value = random_matrix(rng, 4, 2);
  bias.value = random_matrix(rng, 1, 2);

  SUBCASE("matmul + bias + relu") {
    auto res = gradcheck(store, [&](Tape& t) {
      return t.sum_all(t.relu(t.add_rowvec(t.matmul(t.param(a), t.param(b)), t.param(bias))));
    });
    CHECK(res.ok);
  }
  SUBCASE("tanh sigmoid mul") {
    auto res = gradcheck(store, [&](Tape& t) {
      Var x = t.matmul(t.param(a), t.param(b));
      return t.sum_all(t.mul(t.tanh(x), t.sigmoid(x)));
    });
    CHECK(res.ok);
  }
  SUBCASE("concat slice transpose") {
    auto res = gradcheck(store, [&](Tape& t) {
      Var x = t.param(a);
      Var joined = t.concat_cols({x, t.scale(x, 2.0)});
      Var piece = t.slice_cols(joined, 2, 4);
      return t.sum_all(t.matmul(piece, t.transpose(piece)));
    });
    CHECK(res.ok);
  }
  SUBCASE("gather segment_mean mean_rows repeat_row") {
    auto res = gradcheck(store, [&](Tape& t) {
      Var x = t.param(a);  // 3 x 4
      Var g = t.gather_rows(x, {2, 0, 0, 1});
      Var seg = t.segment_mean_rows(g, {1, 1, 0, 2}, 4);  // segment 3 stays empty
      Var m = t.mean_rows(seg);
      Var r = t.repeat_row(m, 3);
      return t.sum_all(t.mul(r, x));
    });
    CHECK(res.ok);
  }
  SUBCASE("masked softmax") {
    nn::ParamStore s2;
    nn::Parameter& col = s2.add("col", 5, 1);
    col.value = random_matrix(rng, 5, 1);
    std::vector<uint8_t> mask = {1, 0, 1, 1, 0};
    Matrix fixed(5, 1);
    fixed << 0.3, -1.0, 2.0, 0.5, 1.0;
    auto res = gradcheck(s2, [&](Tape& t) {
      Var y = t.masked_softmax_col(t.param(col), mask);
      return t.sum_all(t.mul(y, t.constant(fixed)));
    });
    CHECK(res.ok);
  }
  SUBCASE("log softmax picks") {
    nn::ParamStore s2;
    nn::Parameter& logits = s2.add("logits", 1, 6);
    logits.value = random_matrix(rng, 1, 6);
    auto res = gradcheck(s2, [&](Tape& t) {
      return t.scale(t.pick(t.log_softmax_row(t.param(logits)), 0, 3), -1.0);
    });
    CHECK(res.ok);
  }
  SUBCASE("embedding lookup accumulates sparse gradients") {
    nn::ParamStore s2;
    nn::Parameter& table = s2.add("table", 6, 3);
    table.value = random_matrix(rng, 6, 3);
    auto res = gradcheck(s2, [&](Tape& t) {
      Var e = t.lookup_rows(table, {4, 1, 4, 0});
      return t.sum_all(t.mul(e, e));
    });
    CHECK(res.ok);
  }
}

TEST_CASE("masked softmax masked entries are exactly zero and live ones sum to 1") {
  Tape t;
  Matrix scores(4, 1);
  scores << 0.5, 100.0, -2.0, 3.0;
  std::vector<uint8_t> mask = {1, 0, 1, 1};
  Var y = t.masked_softmax_col(t.constant(scores), mask);
  CHECK(y.value()(1, 0) == 0.0);
  CHECK(y.value()(0, 0) + y.value()(2, 0) + y.value()(3, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bilstm gradients match finite differences") {
  nn::Rng rng(11);
  nn::ParamStore store;
  nn::BiLstm lstm = nn::BiLstm::create(store, "lstm", 3, 2, rng);
  nn::Parameter& emb = store.add("emb", 5, 3);
  emb.value = random_matrix(rng, 5, 3);

  auto res = gradcheck(store, [&](Tape& t) {
    Var x = t.lookup_rows(emb, {0, 3, 1, 4});
    nn::BiLstm::Output out = lstm.run(t, x);
    return t.add(t.sum_all(out.token_states), t.sum_all(out.final_state));
  });
  CHECK(res.ok);
  CHECK(res.checked > 100);
}

TEST_CASE("adam converges on a quadratic") {
  nn::ParamStore store;
  nn::Parameter& x = store.add("x", 1, 1);
  x.value(0, 0) = 5.0;
  nn::AdamOptimizer opt({.learning_rate = 0.1});
  for (int i = 0; i < 500; ++i) {
    x.grad(0, 0) = 2.0 * (x.value(0, 0) - 3.0);
    opt.step(store);
  }
  CHECK(x.value(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("parameter blob round-trips bit-exactly") {
  nn::Rng rng(3);
  nn::ParamStore store;
  store.add("w", 4, 5).value = random_matrix(rng, 4, 5);
  store.add("b", 1, 5).value = random_matrix(rng, 1, 5);
  const std::string path = "/tmp/sgvqa_blob_test.bin";
  nn::save_blob(store, path);

  nn::ParamStore loaded;
  loaded.add("w", 4, 5);
  loaded.add("b", 1, 5);
  nn::load_blob(loaded, path);
  CHECK(loaded.at("w").value == store.at("w").value);
  CHECK(loaded.at("b").value == store.at("b").value);
}
