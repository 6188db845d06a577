#include "tommy/nn.hpp"

#include <cmath>

#include "tommy/error.hpp"

namespace tommy {

LstmCell make_lstm(ParameterSet& ps, const std::string& prefix,
                   const std::vector<int>& in_dims, int hidden) {
  int in_total = 0;
  for (int d : in_dims) in_total += d;
  double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmCell cell;
  cell.hidden = hidden;
  cell.in_total = in_total;
  cell.w = ps.create_uniform(prefix + ".w", {in_total + hidden, 4 * hidden},
                             -k, k);
  cell.b = ps.create_uniform(prefix + ".b", {4 * hidden}, -k, k);
  for (int i = hidden; i < 2 * hidden; ++i) cell.b.values()[i] += 1.0;
  return cell;
}

LstmState lstm_zero_state(int hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

LstmState lstm_step(const LstmCell& cell, const std::vector<Tensor>& inputs,
                    const LstmState& state) {
  int got = 0;
  for (const Tensor& x : inputs) got += x.size();
  if (got != cell.in_total)
    throw Error(ErrorKind::dimension,
                "lstm_step input size " + std::to_string(got) +
                    " != expected " + std::to_string(cell.in_total));
  if (state.h.size() != cell.hidden || state.c.size() != cell.hidden)
    throw Error(ErrorKind::dimension, "lstm_step state size mismatch");

  std::vector<Tensor> segs = inputs;
  segs.push_back(state.h);
  Tensor gates = affine(cell.w, cell.b, segs);
  int h = cell.hidden;
  Tensor i = sigmoid(slice(gates, 0, h));
  Tensor f = sigmoid(slice(gates, h, h));
  Tensor g = tanh_t(slice(gates, 2 * h, h));
  Tensor o = sigmoid(slice(gates, 3 * h, h));
  Tensor c_next = add(mul(f, state.c), mul(i, g));
  Tensor h_next = mul(o, tanh_t(c_next));
  return {h_next, c_next};
}

Mlp make_mlp(ParameterSet& ps, const std::string& prefix, int in, int hidden,
             int out) {
  Mlp m;
  m.in = in;
  m.hidden = hidden;
  m.out = out;
  double k1 = 1.0 / std::sqrt(static_cast<double>(in));
  double k2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  m.w1 = ps.create_uniform(prefix + ".w1", {in, hidden}, -k1, k1);
  m.b1 = ps.create_uniform(prefix + ".b1", {hidden}, -k1, k1);
  m.w2 = ps.create_uniform(prefix + ".w2", {hidden, out}, -k2, k2);
  m.b2 = ps.create_uniform(prefix + ".b2", {out}, -k2, k2);
  return m;
}

Tensor mlp_apply(const Mlp& m, const std::vector<Tensor>& inputs) {
  Tensor hidden = relu(affine(m.w1, m.b1, inputs));
  return affine(m.w2, m.b2, {hidden});
}

}  // namespace tommy
