#include "sgvqa/nn/lstm.hpp"

#include "sgvqa/util.hpp"

namespace sgvqa::nn {

BiLstm BiLstm::create(ParamStore& store, const std::string& prefix, int input_dim, int hidden,
                      Rng& rng) {
  BiLstm l;
  l.hidden = hidden;
  l.wx_fwd = &store.add_glorot(prefix + ".wx_fwd", input_dim, 4 * hidden, rng);
  l.wh_fwd = &store.add_glorot(prefix + ".wh_fwd", hidden, 4 * hidden, rng);
  l.b_fwd = &store.add(prefix + ".b_fwd", 1, 4 * hidden);
  l.wx_bwd = &store.add_glorot(prefix + ".wx_bwd", input_dim, 4 * hidden, rng);
  l.wh_bwd = &store.add_glorot(prefix + ".wh_bwd", hidden, 4 * hidden, rng);
  l.b_bwd = &store.add(prefix + ".b_bwd", 1, 4 * hidden);
  return l;
}

BiLstm BiLstm::attach(ParamStore& store, const std::string& prefix, int hidden) {
  BiLstm l;
  l.hidden = hidden;
  l.wx_fwd = &store.at(prefix + ".wx_fwd");
  l.wh_fwd = &store.at(prefix + ".wh_fwd");
  l.b_fwd = &store.at(prefix + ".b_fwd");
  l.wx_bwd = &store.at(prefix + ".wx_bwd");
  l.wh_bwd = &store.at(prefix + ".wh_bwd");
  l.b_bwd = &store.at(prefix + ".b_bwd");
  return l;
}

namespace {

struct Direction {
  Parameter* wx;
  Parameter* wh;
  Parameter* b;
};

// Runs one direction over the given token order, returning per-step hidden
// states aligned with the original token positions.
std::vector<Var> run_direction(Tape& tape, Var embedded, const Direction& dir, int hidden,
                               bool reverse) {
  const int n = embedded.rows();
  Var wx = tape.param(*dir.wx);
  Var wh = tape.param(*dir.wh);
  Var b = tape.param(*dir.b);
  Var h = tape.zeros(1, hidden);
  Var c = tape.zeros(1, hidden);
  std::vector<Var> states(n);
  for (int step = 0; step < n; ++step) {
    const int t = reverse ? n - 1 - step : step;
    Var x = tape.row(embedded, t);
    Var z = tape.add_rowvec(tape.add(tape.matmul(x, wx), tape.matmul(h, wh)), b);
    Var i = tape.sigmoid(tape.slice_cols(z, 0, hidden));
    Var f = tape.sigmoid(tape.slice_cols(z, hidden, hidden));
    Var o = tape.sigmoid(tape.slice_cols(z, 2 * hidden, hidden));
    Var g = tape.tanh(tape.slice_cols(z, 3 * hidden, hidden));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh(c));
    states[t] = h;
  }
  return states;
}

}  // namespace

BiLstm::Output BiLstm::run(Tape& tape, Var embedded) const {
  const int n = embedded.rows();
  if (n == 0) fail("BiLstm::run: empty sequence");
  auto fwd = run_direction(tape, embedded, {wx_fwd, wh_fwd, b_fwd}, hidden, false);
  auto bwd = run_direction(tape, embedded, {wx_bwd, wh_bwd, b_bwd}, hidden, true);
  std::vector<Var> rows(n);
  for (int t = 0; t < n; ++t) rows[t] = tape.concat_cols({fwd[t], bwd[t]});
  Output out;
  out.token_states = n == 1 ? rows[0] : tape.concat_rows(rows);
  out.final_state = tape.concat_cols({fwd[n - 1], bwd[0]});
  return out;
}

}  // namespace sgvqa::nn
