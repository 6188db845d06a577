#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tommy/params.hpp"
#include "tommy/tensor.hpp"

namespace tommy {

// Standard 4-gate cell. Weights stored as one {in_total + hidden, 4*hidden}
// matrix so a step is a single affine over [input segments..., h]. Gate
// order i, f, g, o; forget-gate bias starts at +1.
struct LstmCell {
  Tensor w;  // {in_total + hidden, 4*hidden}
  Tensor b;  // {4*hidden}
  int hidden = 0;
  int in_total = 0;
};

LstmCell make_lstm(ParameterSet& ps, const std::string& prefix,
                   const std::vector<int>& in_dims, int hidden);

struct LstmState {
  Tensor h, c;
};

LstmState lstm_zero_state(int hidden);

LstmState lstm_step(const LstmCell& cell, const std::vector<Tensor>& inputs,
                    const LstmState& state);

inline LstmState lstm_step(const LstmCell& cell, const Tensor& input,
                           const LstmState& state) {
  return lstm_step(cell, std::vector<Tensor>{input}, state);
}

// in -> hidden (ReLU) -> out, linear output.
struct Mlp {
  Tensor w1, b1, w2, b2;
  int in = 0, hidden = 0, out = 0;
};

Mlp make_mlp(ParameterSet& ps, const std::string& prefix, int in, int hidden,
             int out);

Tensor mlp_apply(const Mlp& m, const std::vector<Tensor>& inputs);

inline Tensor mlp_apply(const Mlp& m, const Tensor& input) {
  return mlp_apply(m, std::vector<Tensor>{input});
}

}  // namespace tommy
