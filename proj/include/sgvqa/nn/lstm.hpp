#pragma once

#include <string>

#include "sgvqa/nn/params.hpp"
#include "sgvqa/nn/tape.hpp"

namespace sgvqa::nn {

// Single-layer bidirectional LSTM. Gate order in the packed weight matrices
// is input, forget, output, candidate.
struct BiLstm {
  int hidden = 0;
  Parameter* wx_fwd = nullptr;
  Parameter* wh_fwd = nullptr;
  Parameter* b_fwd = nullptr;
  Parameter* wx_bwd = nullptr;
  Parameter* wh_bwd = nullptr;
  Parameter* b_bwd = nullptr;

  static BiLstm create(ParamStore& store, const std::string& prefix, int input_dim, int hidden,
                       Rng& rng);
  // Rebind handles after loading a store built elsewhere.
  static BiLstm attach(ParamStore& store, const std::string& prefix, int hidden);

  struct Output {
    Var token_states;  // n x 2h, forward and backward states per token
    Var final_state;   // 1 x 2h, last forward state and first-token backward state
  };

  Output run(Tape& tape, Var embedded) const;  // embedded: n x input_dim
};

}  // namespace sgvqa::nn
