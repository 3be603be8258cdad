#pragma once

#include <span>
#include <utility>
#include <vector>

#include "srbrcnn/tape.hpp"

namespace srbrcnn {

// One LSTM direction. Gate rows are stacked [input, forget, output, candidate],
// so wx is (4H x D), wh is (4H x H) and b is (4H).
struct LstmDirParams {
  Tensor wx, wh, b;

  static LstmDirParams zeros(size_t input_dim, size_t hidden_dim) {
    return {Tensor::zeros({4 * hidden_dim, input_dim}),
            Tensor::zeros({4 * hidden_dim, hidden_dim}), Tensor::zeros({4 * hidden_dim})};
  }
  size_t hidden_dim() const { return b.size() / 4; }
};

// The same parameters bound onto a tape.
struct LstmDirRefs {
  Var wx, wh, b;
};

inline LstmDirRefs bind_lstm(Tape& t, const LstmDirParams& p, LstmDirParams* sink) {
  return {t.param(p.wx, sink ? &sink->wx : nullptr), t.param(p.wh, sink ? &sink->wh : nullptr),
          t.param(p.b, sink ? &sink->b : nullptr)};
}

// c_t = f (*) c_prev + i (*) g,  h_t = o (*) tanh(c_t)
inline std::pair<Var, Var> lstm_cell(Tape& t, Var x, Var h_prev, Var c_prev,
                                     const LstmDirRefs& p) {
  size_t h = t.value(p.b).size() / 4;
  Var pre[3] = {t.matvec(p.wx, x), t.matvec(p.wh, h_prev), p.b};
  Var z = t.sum(pre);
  Var gi = t.sigmoid(t.slice(z, 0, h));
  Var gf = t.sigmoid(t.slice(z, h, h));
  Var go = t.sigmoid(t.slice(z, 2 * h, h));
  Var gc = t.tanh(t.slice(z, 3 * h, h));
  Var c_t = t.add(t.mul(gf, c_prev), t.mul(gi, gc));
  Var h_t = t.mul(go, t.tanh(c_t));
  return {h_t, c_t};
}

// Left-to-right and right-to-left passes from zero initial states; the result
// keeps input order, pairing each position's forward and backward states.
inline std::vector<std::pair<Var, Var>> bilstm(Tape& t, std::span<const Var> seq,
                                               const LstmDirRefs& fwd, const LstmDirRefs& bwd) {
  if (seq.empty()) throw std::invalid_argument("bilstm: empty sequence");
  size_t hf = t.value(fwd.b).size() / 4;
  size_t hb = t.value(bwd.b).size() / 4;
  std::vector<std::pair<Var, Var>> out(seq.size());

  Var h = t.constant(Tensor::zeros({hf}));
  Var c = t.constant(Tensor::zeros({hf}));
  for (size_t i = 0; i < seq.size(); ++i) {
    std::tie(h, c) = lstm_cell(t, seq[i], h, c, fwd);
    out[i].first = h;
  }
  h = t.constant(Tensor::zeros({hb}));
  c = t.constant(Tensor::zeros({hb}));
  for (size_t i = seq.size(); i-- > 0;) {
    std::tie(h, c) = lstm_cell(t, seq[i], h, c, bwd);
    out[i].second = h;
  }
  return out;
}

// L_ab = tanh(W_con . [h_a (+) h_ab (+) h_b] + b_con)
inline Var conv_unit(Tape& t, Var h_a, Var h_ab, Var h_b, Var w_con, Var b_con) {
  return t.tanh(t.affine(t.concat(h_a, h_ab, h_b), w_con, b_con));
}

}  // namespace srbrcnn
