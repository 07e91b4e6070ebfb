// graph.hpp -- reverse-mode autodiff tape over TensorT. Ops evaluate eagerly
// and record a backward closure; backward() runs closures in reverse creation
// order, which is a reverse topological order by construction.
#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "scwr/tensor.hpp"

namespace scwr {

template <typename T>
class Graph {
 public:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;  // empty until backward touches it
    std::function<void(Graph&, int)> backward;
  };

  // Debug mode: scan every op output for NaN/Inf.
  bool check_finite = false;

  int add_node(TensorT<T> value, std::function<void(Graph&, int)> bwd) {
    if (check_finite && has_nonfinite(value))
      fail_numeric("non-finite value produced by graph op");
    nodes_.push_back(Node{std::move(value), TensorT<T>(), std::move(bwd)});
    return int(nodes_.size()) - 1;
  }

  int leaf(TensorT<T> v) { return add_node(std::move(v), nullptr); }
  int constant(TensorT<T> v) { return add_node(std::move(v), nullptr); }

  const TensorT<T>& value(int id) const { return nodes_[size_t(id)].value; }
  TensorT<T>& grad_ref(int id) { return nodes_[size_t(id)].grad; }

  // Gradient of the last backward() target w.r.t. node `id`; zeros if the
  // node is not an ancestor of the loss.
  TensorT<T> grad(int id) const {
    const Node& n = nodes_[size_t(id)];
    if (n.grad.size() == 0) return TensorT<T>::zeros(n.value.shape);
    return n.grad;
  }

  void accumulate_grad(int id, const TensorT<T>& g) {
    Node& n = nodes_[size_t(id)];
    const TensorT<T>& r =
        g.shape == n.value.shape ? g : reduce_to_shape(g, n.value.shape);
    if (n.grad.size() == 0) {
      n.grad = r;
    } else {
      for (int64_t i = 0; i < r.size(); ++i) n.grad[i] += r[i];
    }
  }

  void backward(int loss) {
    require(loss >= 0 && loss < int(nodes_.size()), "backward on unknown node");
    require(nodes_[size_t(loss)].value.is_scalar(),
            "backward requires a scalar loss");
    for (auto& n : nodes_) n.grad = TensorT<T>();
    nodes_[size_t(loss)].grad = TensorT<T>::full(nodes_[size_t(loss)].value.shape, T(1));
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[size_t(id)];
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// Lightweight handle; all ops below are free functions over Var.
template <typename T>
struct Var {
  Graph<T>* g = nullptr;
  int id = -1;

  const TensorT<T>& value() const { return g->value(id); }
  TensorT<T> grad() const { return g->grad(id); }
};

template <typename T>
Var<T> make_leaf(Graph<T>& g, TensorT<T> v) {
  return {&g, g.leaf(std::move(v))};
}
template <typename T>
Var<T> make_const(Graph<T>& g, TensorT<T> v) {
  return {&g, g.constant(std::move(v))};
}

// ---------------------------------------------------------------------------
// Elementwise / broadcasting ops.

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.g;
  int id = g.add_node(add(g.value(a.id), g.value(b.id)),
                      [ia = a.id, ib = b.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, g.grad_ref(self));
                        g.accumulate_grad(ib, g.grad_ref(self));
                      });
  return {&g, id};
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.g;
  int id = g.add_node(sub(g.value(a.id), g.value(b.id)),
                      [ia = a.id, ib = b.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, g.grad_ref(self));
                        g.accumulate_grad(ib, scale(g.grad_ref(self), T(-1)));
                      });
  return {&g, id};
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.g;
  int id = g.add_node(mul(g.value(a.id), g.value(b.id)),
                      [ia = a.id, ib = b.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, mul(g.grad_ref(self), g.value(ib)));
                        g.accumulate_grad(ib, mul(g.grad_ref(self), g.value(ia)));
                      });
  return {&g, id};
}

template <typename T>
Var<T> divide(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.g;
  int id = g.add_node(
      divide(g.value(a.id), g.value(b.id)),
      [ia = a.id, ib = b.id](Graph<T>& g, int self) {
        const TensorT<T>& go = g.grad_ref(self);
        g.accumulate_grad(ia, divide(go, g.value(ib)));
        TensorT<T> b2 = mul(g.value(ib), g.value(ib));
        g.accumulate_grad(ib, scale(divide(mul(go, g.value(ia)), b2), T(-1)));
      });
  return {&g, id};
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  Graph<T>& g = *a.g;
  int id = g.add_node(scale(g.value(a.id), c),
                      [ia = a.id, c](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, scale(g.grad_ref(self), c));
                      });
  return {&g, id};
}

template <typename T>
Var<T> add_scalar(Var<T> a, T c) {
  Graph<T>& g = *a.g;
  int id = g.add_node(add_scalar(g.value(a.id), c),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, g.grad_ref(self));
                      });
  return {&g, id};
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(sigmoid(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        const TensorT<T>& y = g.value(self);
                        TensorT<T> d = ew_unary(y, [](T v) { return v * (T(1) - v); });
                        g.accumulate_grad(ia, mul(g.grad_ref(self), d));
                      });
  return {&g, id};
}

template <typename T>
Var<T> vtanh(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(vtanh(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        const TensorT<T>& y = g.value(self);
                        TensorT<T> d = ew_unary(y, [](T v) { return T(1) - v * v; });
                        g.accumulate_grad(ia, mul(g.grad_ref(self), d));
                      });
  return {&g, id};
}

template <typename T>
Var<T> vexp(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(vexp(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, mul(g.grad_ref(self), g.value(self)));
                      });
  return {&g, id};
}

template <typename T>
Var<T> vlog(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(vlog(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, divide(g.grad_ref(self), g.value(ia)));
                      });
  return {&g, id};
}

template <typename T>
Var<T> vsqrt(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(vsqrt(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        const TensorT<T>& y = g.value(self);
                        TensorT<T> d = ew_unary(y, [](T v) { return T(0.5) / v; });
                        g.accumulate_grad(ia, mul(g.grad_ref(self), d));
                      });
  return {&g, id};
}

template <typename T>
Var<T> softplus(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(softplus(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, mul(g.grad_ref(self), sigmoid(g.value(ia))));
                      });
  return {&g, id};
}

template <typename T>
Var<T> log1mexp(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(
      log1mexp(g.value(a.id)), [ia = a.id](Graph<T>& g, int self) {
        TensorT<T> d = ew_unary(g.value(ia),
                                [](T v) { return T(1) / T(std::expm1(double(v))); });
        g.accumulate_grad(ia, mul(g.grad_ref(self), d));
      });
  return {&g, id};
}

// Subgradient passes where x >= c.
template <typename T>
Var<T> clamp_min(Var<T> a, T c) {
  Graph<T>& g = *a.g;
  int id = g.add_node(clamp_min(g.value(a.id), c),
                      [ia = a.id, c](Graph<T>& g, int self) {
                        TensorT<T> m = ew_unary(g.value(ia), [c](T v) {
                          return v >= c ? T(1) : T(0);
                        });
                        g.accumulate_grad(ia, mul(g.grad_ref(self), m));
                      });
  return {&g, id};
}

template <typename T>
Var<T> relu(Var<T> a) {
  return clamp_min(a, T(0));
}

// ---------------------------------------------------------------------------
// Matrix ops.

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.g;
  int id = g.add_node(
      matmul(g.value(a.id), g.value(b.id)),
      [ia = a.id, ib = b.id](Graph<T>& g, int self) {
        const TensorT<T>& go = g.grad_ref(self);
        g.accumulate_grad(ia, matmul(go, transpose(g.value(ib))));
        g.accumulate_grad(ib, matmul(transpose(g.value(ia)), go));
      });
  return {&g, id};
}

template <typename T>
Var<T> transpose(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(transpose(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, transpose(g.grad_ref(self)));
                      });
  return {&g, id};
}

// ---------------------------------------------------------------------------
// Reductions (axis reductions keep the reduced dim as size 1).

template <typename T>
Var<T> sum_axis(Var<T> a, int axis) {
  Graph<T>& g = *a.g;
  int id = g.add_node(sum_axis(g.value(a.id), axis),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(
                            ia, broadcast_to(g.grad_ref(self), g.value(ia).shape));
                      });
  return {&g, id};
}

template <typename T>
Var<T> mean_axis(Var<T> a, int axis) {
  Graph<T>& g = *a.g;
  T inv = T(1) / T(g.value(a.id).shape[size_t(axis)]);
  return scale(sum_axis(a, axis), inv);
}

template <typename T>
Var<T> max_axis(Var<T> a, int axis) {
  Graph<T>& g = *a.g;
  int id = g.add_node(
      max_axis(g.value(a.id), axis), [ia = a.id, axis](Graph<T>& g, int self) {
        const TensorT<T>& x = g.value(ia);
        const TensorT<T>& y = g.value(self);
        const TensorT<T>& go = g.grad_ref(self);
        TensorT<T> gx = TensorT<T>::zeros(x.shape);
        int64_t outer = 1, inner = 1;
        for (int i = 0; i < axis; ++i) outer *= x.shape[size_t(i)];
        for (int i = axis + 1; i < x.rank(); ++i) inner *= x.shape[size_t(i)];
        int64_t n = x.shape[size_t(axis)];
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t in = 0; in < inner; ++in) {
            // route to the first argmax
            for (int64_t j = 0; j < n; ++j) {
              int64_t xi = (o * n + j) * inner + in;
              if (x.data[size_t(xi)] == y.data[size_t(o * inner + in)]) {
                gx.data[size_t(xi)] = go.data[size_t(o * inner + in)];
                break;
              }
            }
          }
        g.accumulate_grad(ia, gx);
      });
  return {&g, id};
}

template <typename T>
Var<T> logsumexp_axis(Var<T> a, int axis) {
  Graph<T>& g = *a.g;
  int id = g.add_node(
      logsumexp_axis(g.value(a.id), axis),
      [ia = a.id](Graph<T>& g, int self) {
        // d/dx = softmax(x) along the axis = exp(x - lse)
        TensorT<T> soft = vexp(sub(g.value(ia), broadcast_to(g.value(self),
                                                             g.value(ia).shape)));
        g.accumulate_grad(ia, mul(broadcast_to(g.grad_ref(self), g.value(ia).shape), soft));
      });
  return {&g, id};
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  Graph<T>& g = *a.g;
  int id = g.add_node(sum_all(g.value(a.id)),
                      [ia = a.id](Graph<T>& g, int self) {
                        T gv = g.grad_ref(self).item();
                        g.accumulate_grad(ia, TensorT<T>::full(g.value(ia).shape, gv));
                      });
  return {&g, id};
}

template <typename T>
Var<T> mean_all(Var<T> a) {
  Graph<T>& g = *a.g;
  T inv = T(1) / T(g.value(a.id).size());
  return scale(sum_all(a), inv);
}

// ---------------------------------------------------------------------------
// Structural ops.

template <typename T>
Var<T> reshape(Var<T> a, std::vector<int> shape) {
  Graph<T>& g = *a.g;
  int id = g.add_node(reshape(g.value(a.id), std::move(shape)),
                      [ia = a.id](Graph<T>& g, int self) {
                        g.accumulate_grad(
                            ia, reshape(g.grad_ref(self), g.value(ia).shape));
                      });
  return {&g, id};
}

template <typename T>
Var<T> slice_rows(Var<T> a, int r0, int n) {
  Graph<T>& g = *a.g;
  int id = g.add_node(slice_rows(g.value(a.id), r0, n),
                      [ia = a.id, r0](Graph<T>& g, int self) {
                        const TensorT<T>& go = g.grad_ref(self);
                        TensorT<T> gx = TensorT<T>::zeros(g.value(ia).shape);
                        int C = gx.shape[1];
                        std::copy(go.data.begin(), go.data.end(),
                                  gx.data.begin() + int64_t(r0) * C);
                        g.accumulate_grad(ia, gx);
                      });
  return {&g, id};
}

template <typename T>
Var<T> slice_cols(Var<T> a, int c0, int n) {
  Graph<T>& g = *a.g;
  int id = g.add_node(slice_cols(g.value(a.id), c0, n),
                      [ia = a.id, c0, n](Graph<T>& g, int self) {
                        const TensorT<T>& go = g.grad_ref(self);
                        TensorT<T> gx = TensorT<T>::zeros(g.value(ia).shape);
                        int R = gx.shape[0], C = gx.shape[1];
                        for (int r = 0; r < R; ++r)
                          for (int c = 0; c < n; ++c)
                            gx.data[size_t(r) * C + c0 + c] =
                                go.data[size_t(r) * n + c];
                        g.accumulate_grad(ia, gx);
                      });
  return {&g, id};
}

template <typename T>
Var<T> row(Var<T> a, int r) {
  return slice_rows(a, r, 1);
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), "concat of nothing");
  Graph<T>& g = *parts[0].g;
  std::vector<const TensorT<T>*> vals;
  std::vector<int> ids;
  vals.reserve(parts.size());
  for (auto& p : parts) {
    vals.push_back(&g.value(p.id));
    ids.push_back(p.id);
  }
  int id = g.add_node(concat_rows(vals),
                      [ids](Graph<T>& g, int self) {
                        const TensorT<T>& go = g.grad_ref(self);
                        int r0 = 0;
                        for (int pid : ids) {
                          int n = g.value(pid).shape[0];
                          g.accumulate_grad(pid, slice_rows(go, r0, n));
                          r0 += n;
                        }
                      });
  return {&g, id};
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), "concat of nothing");
  Graph<T>& g = *parts[0].g;
  std::vector<const TensorT<T>*> vals;
  std::vector<int> ids;
  for (auto& p : parts) {
    vals.push_back(&g.value(p.id));
    ids.push_back(p.id);
  }
  int id = g.add_node(concat_cols(vals),
                      [ids](Graph<T>& g, int self) {
                        const TensorT<T>& go = g.grad_ref(self);
                        int c0 = 0;
                        for (int pid : ids) {
                          int n = g.value(pid).shape[1];
                          g.accumulate_grad(pid, slice_cols(go, c0, n));
                          c0 += n;
                        }
                      });
  return {&g, id};
}

template <typename T>
Var<T> repeat_rows(Var<T> a, int f) {
  Graph<T>& g = *a.g;
  int id = g.add_node(repeat_rows(g.value(a.id), f),
                      [ia = a.id, f](Graph<T>& g, int self) {
                        const TensorT<T>& go = g.grad_ref(self);
                        const TensorT<T>& x = g.value(ia);
                        int R = x.shape[0], C = x.shape[1];
                        TensorT<T> gx({R, C});
                        for (int r = 0; r < R; ++r)
                          for (int i = 0; i < f; ++i)
                            for (int c = 0; c < C; ++c)
                              gx.data[size_t(r) * C + c] +=
                                  go.data[(size_t(r) * f + i) * C + c];
                        g.accumulate_grad(ia, gx);
                      });
  return {&g, id};
}

template <typename T>
Var<T> shift_rows(Var<T> a, int off) {
  Graph<T>& g = *a.g;
  int id = g.add_node(shift_rows(g.value(a.id), off),
                      [ia = a.id, off](Graph<T>& g, int self) {
                        g.accumulate_grad(ia, shift_rows(g.grad_ref(self), -off));
                      });
  return {&g, id};
}

template <typename T>
Var<T> smooth1d(Var<T> x, Var<T> kernel) {
  Graph<T>& g = *x.g;
  int id = g.add_node(
      smooth1d(g.value(x.id), g.value(kernel.id)),
      [ix = x.id, ik = kernel.id](Graph<T>& g, int self) {
        const TensorT<T>& go = g.grad_ref(self);
        const TensorT<T>& xv = g.value(ix);
        const TensorT<T>& kv = g.value(ik);
        int Tn = xv.shape[0], C = xv.shape[1], L = kv.shape[0], P = (L - 1) / 2;
        TensorT<T> gx(xv.shape);
        TensorT<T> gk(kv.shape);
        for (int t = 0; t < Tn; ++t) {
          const T* gr = go.data.data() + int64_t(t) * C;
          for (int j = 0; j < L; ++j) {
            int s = std::clamp(t + j - P, 0, Tn - 1);
            T kj = kv.data[size_t(j)];
            T* xr = gx.data.data() + int64_t(s) * C;
            const T* xv_r = xv.data.data() + int64_t(s) * C;
            T acc = 0;
            for (int c = 0; c < C; ++c) {
              xr[c] += kj * gr[c];
              acc += gr[c] * xv_r[c];
            }
            gk.data[size_t(j)] += acc;
          }
        }
        g.accumulate_grad(ix, gx);
        g.accumulate_grad(ik, gk);
      });
  return {&g, id};
}

// Operator sugar for readable model code.
template <typename T>
Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <typename T>
Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }
template <typename T>
Var<T> operator*(Var<T> a, Var<T> b) { return mul(a, b); }

}  // namespace scwr
