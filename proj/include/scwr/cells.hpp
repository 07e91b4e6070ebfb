// cells.hpp -- gated recurrent cells. Tape versions drive training, plain
// versions drive inference; both share the same gate layout and kernels.
#pragma once

#include "scwr/graph.hpp"
#include "scwr/tensor.hpp"

namespace scwr {

// GRU, gate order [r | z | n]:
//   r = sigmoid(x Wx_r + bx_r + h Wh_r + bh_r)
//   z = sigmoid(x Wx_z + bx_z + h Wh_z + bh_z)
//   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h
template <typename T>
struct GruWeightsV {
  Var<T> wx, wh, bx, bh;  // (in x 3R), (R x 3R), (3R), (3R)
};

template <typename T>
Var<T> gru_cell(Var<T> x, Var<T> h, const GruWeightsV<T>& w) {
  int R = h.value().shape[1];
  Var<T> gx = add(matmul(x, w.wx), w.bx);
  Var<T> gh = add(matmul(h, w.wh), w.bh);
  Var<T> r = sigmoid(add(slice_cols(gx, 0, R), slice_cols(gh, 0, R)));
  Var<T> z = sigmoid(add(slice_cols(gx, R, R), slice_cols(gh, R, R)));
  Var<T> n = vtanh(add(slice_cols(gx, 2 * R, R), mul(r, slice_cols(gh, 2 * R, R))));
  Var<T> one_minus_z = add_scalar(scale(z, T(-1)), T(1));
  return add(mul(one_minus_z, n), mul(z, h));
}

template <typename T>
struct GruWeightsP {
  const TensorT<T>*wx, *wh, *bx, *bh;
};

template <typename T>
TensorT<T> gru_cell(const TensorT<T>& x, const TensorT<T>& h,
                    const GruWeightsP<T>& w) {
  int R = h.shape[1];
  TensorT<T> gx = add(matmul(x, *w.wx), *w.bx);
  TensorT<T> gh = add(matmul(h, *w.wh), *w.bh);
  TensorT<T> r = sigmoid(add(slice_cols(gx, 0, R), slice_cols(gh, 0, R)));
  TensorT<T> z = sigmoid(add(slice_cols(gx, R, R), slice_cols(gh, R, R)));
  TensorT<T> n =
      vtanh(add(slice_cols(gx, 2 * R, R), mul(r, slice_cols(gh, 2 * R, R))));
  TensorT<T> one_minus_z = add_scalar(scale(z, T(-1)), T(1));
  return add(mul(one_minus_z, n), mul(z, h));
}

// LSTM, gate order [i | f | g | o], single bias vector:
//   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
//   c' = f * c + i * g;  h' = o * tanh(c')
template <typename T>
struct LstmWeightsV {
  Var<T> wx, wh, b;  // (in x 4R), (R x 4R), (4R)
};

template <typename T>
struct LstmStateV {
  Var<T> h, c;
};

template <typename T>
LstmStateV<T> lstm_cell(Var<T> x, LstmStateV<T> s, const LstmWeightsV<T>& w) {
  int R = s.h.value().shape[1];
  Var<T> gates = add(add(matmul(x, w.wx), matmul(s.h, w.wh)), w.b);
  Var<T> i = sigmoid(slice_cols(gates, 0, R));
  Var<T> f = sigmoid(slice_cols(gates, R, R));
  Var<T> g = vtanh(slice_cols(gates, 2 * R, R));
  Var<T> o = sigmoid(slice_cols(gates, 3 * R, R));
  Var<T> c = add(mul(f, s.c), mul(i, g));
  Var<T> h = mul(o, vtanh(c));
  return {h, c};
}

template <typename T>
struct LstmWeightsP {
  const TensorT<T>*wx, *wh, *b;
};

template <typename T>
struct LstmStateP {
  TensorT<T> h, c;
};

template <typename T>
LstmStateP<T> lstm_cell(const TensorT<T>& x, const LstmStateP<T>& s,
                        const LstmWeightsP<T>& w) {
  int R = s.h.shape[1];
  TensorT<T> gates = add(add(matmul(x, *w.wx), matmul(s.h, *w.wh)), *w.b);
  TensorT<T> i = sigmoid(slice_cols(gates, 0, R));
  TensorT<T> f = sigmoid(slice_cols(gates, R, R));
  TensorT<T> g = vtanh(slice_cols(gates, 2 * R, R));
  TensorT<T> o = sigmoid(slice_cols(gates, 3 * R, R));
  TensorT<T> c = add(mul(f, s.c), mul(i, g));
  TensorT<T> h = mul(o, vtanh(c));
  return {h, c};
}

}  // namespace scwr
