// tensor.hpp -- dense row-major tensors plus the arithmetic kernels shared by
// the autodiff graph and the plain inference paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "scwr/common.hpp"

namespace scwr {

inline int64_t numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(size_t(numel(shape)), T(0));
  }
  TensorT(std::vector<int> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    require(int64_t(data.size()) == numel(shape),
            "tensor data length does not match shape " + shape_str(shape));
  }

  static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }
  static TensorT full(std::vector<int> s, T v) {
    TensorT t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static TensorT scalar(T v) { return TensorT({1}, {v}); }

  int rank() const { return int(shape.size()); }
  int dim(int i) const { return shape[size_t(i)]; }
  int64_t size() const { return int64_t(data.size()); }
  bool is_scalar() const { return size() == 1; }

  T item() const {
    require(is_scalar(), "item() on non-scalar tensor " + shape_str(shape));
    return data[0];
  }

  int rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? 1 : -1); }
  int cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : -1); }

  T& at(int r, int c) { return data[size_t(r) * size_t(shape[1]) + size_t(c)]; }
  const T& at(int r, int c) const {
    return data[size_t(r) * size_t(shape[1]) + size_t(c)];
  }
  T& operator[](int64_t i) { return data[size_t(i)]; }
  const T& operator[](int64_t i) const { return data[size_t(i)]; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(shape);
    for (int64_t i = 0; i < size(); ++i) out.data[size_t(i)] = U(data[size_t(i)]);
    return out;
  }
};

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
bool has_nonfinite(const TensorT<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(double(v))) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Scalar helpers (numerically stable forms, shared by kernels and oracles).

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T stable_softplus(T x) {
  if (x > T(0)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(1 - exp(-d)) for d > 0.
template <typename T>
T stable_log1mexp(T d) {
  const T ln2 = T(0.6931471805599453);
  if (d <= ln2) return std::log(-std::expm1(-double(d)));
  return std::log1p(-std::exp(-double(d)));
}

// ---------------------------------------------------------------------------
// Broadcasting (trailing-dimension alignment).

inline std::vector<int> broadcast_shape(const std::vector<int>& a,
                                        const std::vector<int>& b) {
  size_t rank = std::max(a.size(), b.size());
  std::vector<int> out(rank);
  for (size_t i = 0; i < rank; ++i) {
    int da = i < a.size() ? a[a.size() - 1 - i] : 1;
    int db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1)
      fail_data("shapes not broadcastable: " + shape_str(a) + " vs " +
                shape_str(b));
    out[rank - 1 - i] = std::max(da, db);
  }
  return out;
}

// Strides with 0 on broadcast dimensions, aligned to `out` rank.
inline std::vector<int64_t> broadcast_strides(const std::vector<int>& shape,
                                              const std::vector<int>& out) {
  std::vector<int64_t> strides(out.size(), 0);
  int64_t s = 1;
  for (size_t i = 0; i < shape.size(); ++i) {
    size_t src = shape.size() - 1 - i;
    size_t dst = out.size() - 1 - i;
    strides[dst] = shape[src] == 1 ? 0 : s;
    s *= shape[src];
  }
  return strides;
}

template <typename T, typename F>
TensorT<T> ew_binary(const TensorT<T>& a, const TensorT<T>& b, F f) {
  if (a.shape == b.shape) {
    TensorT<T> out(a.shape);
    for (int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  std::vector<int> os = broadcast_shape(a.shape, b.shape);
  TensorT<T> out(os);
  // Fast path: (R x C) op (C) or (R x C) op (R x 1).
  if (os.size() == 2 && a.shape == os) {
    int R = os[0], C = os[1];
    if (numel(b.shape) == C && (b.rank() == 1 || (b.rank() == 2 && b.shape[0] == 1))) {
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
          out.data[size_t(r) * C + c] = f(a.data[size_t(r) * C + c], b.data[size_t(c)]);
      return out;
    }
    if (b.rank() == 2 && b.shape[0] == R && b.shape[1] == 1) {
      for (int r = 0; r < R; ++r) {
        T bv = b.data[size_t(r)];
        for (int c = 0; c < C; ++c)
          out.data[size_t(r) * C + c] = f(a.data[size_t(r) * C + c], bv);
      }
      return out;
    }
  }
  std::vector<int64_t> sa = broadcast_strides(a.shape, os);
  std::vector<int64_t> sb = broadcast_strides(b.shape, os);
  std::vector<int64_t> idx(os.size(), 0);
  int64_t oa = 0, ob = 0;
  for (int64_t i = 0; i < out.size(); ++i) {
    out[i] = f(a.data[size_t(oa)], b.data[size_t(ob)]);
    for (int d = int(os.size()) - 1; d >= 0; --d) {
      idx[size_t(d)]++;
      oa += sa[size_t(d)];
      ob += sb[size_t(d)];
      if (idx[size_t(d)] < os[size_t(d)]) break;
      oa -= sa[size_t(d)] * os[size_t(d)];
      ob -= sb[size_t(d)] * os[size_t(d)];
      idx[size_t(d)] = 0;
    }
  }
  return out;
}

template <typename T, typename F>
TensorT<T> ew_unary(const TensorT<T>& a, F f) {
  TensorT<T> out(a.shape);
  for (int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// Sum `g` down to `shape` (inverse of broadcasting) for gradient accumulation.
template <typename T>
TensorT<T> reduce_to_shape(const TensorT<T>& g, const std::vector<int>& shape) {
  if (g.shape == shape) return g;
  TensorT<T> out(shape);
  std::vector<int64_t> st = broadcast_strides(shape, g.shape);
  std::vector<int64_t> idx(g.shape.size(), 0);
  int64_t
      off = 0;
  for (int64_t i = 0; i < g.size(); ++i) {
    out.data[size_t(off)] += g[i];
    for (int d = int(g.shape.size()) - 1; d >= 0; --d) {
      idx[size_t(d)]++;
      off += st[size_t(d)];
      if (idx[size_t(d)] < g.shape[size_t(d)]) break;
      off -= st[size_t(d)] * g.shape[size_t(d)];
      idx[size_t(d)] = 0;
    }
  }
  return out;
}

template <typename T>
TensorT<T> broadcast_to(const TensorT<T>& a, const std::vector<int>& shape) {
  return ew_binary(TensorT<T>::zeros(shape), a, [](T, T y) { return y; });
}

// ---------------------------------------------------------------------------
// Elementwise ops.

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(a, b, [](T x, T y) { return x + y; });
}
template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(a, b, [](T x, T y) { return x - y; });
}
template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(a, b, [](T x, T y) { return x * y; });
}
template <typename T>
TensorT<T> divide(const TensorT<T>& a, const TensorT<T>& b) {
  return ew_binary(a, b, [](T x, T y) { return x / y; });
}
template <typename T>
TensorT<T> scale(const TensorT<T>& a, T c) {
  return ew_unary(a, [c](T x) { return x * c; });
}
template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T c) {
  return ew_unary(a, [c](T x) { return x + c; });
}
template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
  return ew_unary(a, [](T x) { return stable_sigmoid(x); });
}
template <typename T>
TensorT<T> vtanh(const TensorT<T>& a) {
  return ew_unary(a, [](T x) { return std::tanh(x); });
}
template <typename T>
TensorT<T> vexp(const TensorT<T>& a) {
  return ew_unary(a, [](T x) { return std::exp(x); });
}
template <typename T>
TensorT<T> vlog(const TensorT<T>& a) {
  for (T v : a.data)
    if (!(v > T(0))) fail_data("log of non-positive input");
  return ew_unary(a, [](T x) { return std::log(x); });
}
template <typename T>
TensorT<T> vsqrt(const TensorT<T>& a) {
  return ew_unary(a, [](T x) { return std::sqrt(x); });
}
template <typename T>
TensorT<T> softplus(const TensorT<T>& a) {
  return ew_unary(a, [](T x) { return stable_softplus(x); });
}
template <typename T>
TensorT<T> log1mexp(const TensorT<T>& a) {
  for (T v : a.data)
    if (!(v > T(0))) fail_data("log1mexp requires positive input");
  return ew_unary(a, [](T x) { return stable_log1mexp(x); });
}
template <typename T>
TensorT<T> clamp_min(const TensorT<T>& a, T c) {
  return ew_unary(a, [c](T x) { return x < c ? c : x; });
}
template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
  return clamp_min(a, T(0));
}

// ---------------------------------------------------------------------------
// Matrix ops (2-D).

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  require(a.rank() == 2 && b.rank() == 2,
          "matmul expects 2-D tensors, got " + shape_str(a.shape) + " and " +
              shape_str(b.shape));
  require(a.shape[1] == b.shape[0], "matmul inner dims disagree: " +
                                        shape_str(a.shape) + " vs " +
                                        shape_str(b.shape));
  int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  TensorT<T> out({m, n});
  const T* pa = a.data.data();
  const T* pb = b.data.data();
  T* po = out.data.data();
  int64_t grain = std::max<int64_t>(1, (1 << 20) / std::max<int64_t>(1, int64_t(k) * n));
  parallel_for(m, grain, [&](int64_t r0, int64_t r1) {
    for (int64_t i = r0; i < r1; ++i) {
      T* orow = po + i * n;
      for (int kk = 0; kk < k; ++kk) {
        T av = pa[i * k + kk];
        if (av == T(0)) continue;
        const T* brow = pb + int64_t(kk) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  });
  return out;
}

template <typename T>
TensorT<T> transpose(const TensorT<T>& a) {
  require(a.rank() == 2, "transpose expects 2-D tensor");
  int m = a.shape[0], n = a.shape[1];
  TensorT<T> out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Reductions. Axis reductions keep the reduced dimension as size 1 so the
// result broadcasts back against the input.

inline void check_axis(int axis, int rank) {
  if (axis < 0 || axis >= rank) fail_data("invalid reduction axis");
}

template <typename T, typename F>
TensorT<T> reduce_axis_impl(const TensorT<T>& a, int axis, T init, F f) {
  check_axis(axis, a.rank());
  std::vector<int> os = a.shape;
  os[size_t(axis)] = 1;
  TensorT<T> out = TensorT<T>::full(os, init);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= a.shape[size_t(i)];
  for (int i = axis + 1; i < a.rank(); ++i) inner *= a.shape[size_t(i)];
  int64_t n = a.shape[size_t(axis)];
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t in = 0; in < inner; ++in)
        f(out.data[size_t(o * inner + in)],
          a.data[size_t((o * n + j) * inner + in)]);
  return out;
}

template <typename T>
TensorT<T> sum_axis(const TensorT<T>& a, int axis) {
  return reduce_axis_impl(a, axis, T(0), [](T& acc, T v) { acc += v; });
}
template <typename T>
TensorT<T> mean_axis(const TensorT<T>& a, int axis) {
  check_axis(axis, a.rank());
  return scale(sum_axis(a, axis), T(1) / T(a.shape[size_t(axis)]));
}
template <typename T>
TensorT<T> max_axis(const TensorT<T>& a, int axis) {
  return reduce_axis_impl(a, axis, std::numeric_limits<T>::lowest(),
                          [](T& acc, T v) { acc = v > acc ? v : acc; });
}
// logsumexp with max subtraction: m + log(sum(exp(x - m))).
template <typename T>
TensorT<T> logsumexp_axis(const TensorT<T>& a, int axis) {
  TensorT<T> m = max_axis(a, axis);
  TensorT<T> shifted = sub(a, m);
  TensorT<T> s = sum_axis(vexp(shifted), axis);
  return add(m, vlog(s));
}

template <typename T>
TensorT<T> sum_all(const TensorT<T>& a) {
  T acc = 0;
  for (T v : a.data) acc += v;
  return TensorT<T>::scalar(acc);
}
template <typename T>
TensorT<T> mean_all(const TensorT<T>& a) {
  return TensorT<T>::scalar(sum_all(a).item() / T(a.size()));
}

// ---------------------------------------------------------------------------
// Structural ops (2-D rows/cols).

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, std::vector<int> shape) {
  require(numel(shape) == a.size(), "reshape element count mismatch");
  return TensorT<T>(std::move(shape), a.data);
}

template <typename T>
TensorT<T> slice_rows(const TensorT<T>& a, int r0, int n) {
  require(a.rank() == 2 && r0 >= 0 && n >= 1 && r0 + n <= a.shape[0],
          "bad row slice");
  int C = a.shape[1];
  TensorT<T> out({n, C});
  std::copy(a.data.begin() + int64_t(r0) * C,
            a.data.begin() + int64_t(r0 + n) * C, out.data.begin());
  return out;
}

template <typename T>
TensorT<T> slice_cols(const TensorT<T>& a, int c0, int n) {
  require(a.rank() == 2 && c0 >= 0 && n >= 1 && c0 + n <= a.shape[1],
          "bad col slice");
  int R = a.shape[0], C = a.shape[1];
  TensorT<T> out({R, n});
  for (int r = 0; r < R; ++r)
    std::copy(a.data.begin() + int64_t(r) * C + c0,
              a.data.begin() + int64_t(r) * C + c0 + n,
              out.data.begin() + int64_t(r) * n);
  return out;
}

template <typename T>
TensorT<T> concat_rows(const std::vector<const TensorT<T>*>& parts) {
  require(!parts.empty(), "concat of nothing");
  int C = parts[0]->shape[1];
  int R = 0;
  for (auto* p : parts) {
    require(p->rank() == 2 && p->shape[1] == C, "concat_rows column mismatch");
    R += p->shape[0];
  }
  TensorT<T> out({R, C});
  int64_t off = 0;
  for (auto* p : parts) {
    std::copy(p->data.begin(), p->data.end(), out.data.begin() + off);
    off += p->size();
  }
  return out;
}

template <typename T>
TensorT<T> concat_cols(const std::vector<const TensorT<T>*>& parts) {
  require(!parts.empty(), "concat of nothing");
  int R = parts[0]->shape[0];
  int C = 0;
  for (auto* p : parts) {
    require(p->rank() == 2 && p->shape[0] == R, "concat_cols row mismatch");
    C += p->shape[1];
  }
  TensorT<T> out({R, C});
  for (int r = 0; r < R; ++r) {
    int64_t off = int64_t(r) * C;
    for (auto* p : parts) {
      int pc = p->shape[1];
      std::copy(p->data.begin() + int64_t(r) * pc,
                p->data.begin() + int64_t(r + 1) * pc, out.data.begin() + off);
      off += pc;
    }
  }
  return out;
}

// Each row repeated `f` times in place: [r0,r0,..,r1,r1,..].
template <typename T>
TensorT<T> repeat_rows(const TensorT<T>& a, int f) {
  require(a.rank() == 2 && f >= 1, "repeat_rows expects 2-D tensor, f >= 1");
  int R = a.shape[0], C = a.shape[1];
  TensorT<T> out({R * f, C});
  for (int r = 0; r < R; ++r)
    for (int i = 0; i < f; ++i)
      std::copy(a.data.begin() + int64_t(r) * C,
                a.data.begin() + int64_t(r + 1) * C,
                out.data.begin() + (int64_t(r) * f + i) * C);
  return out;
}

// Rows shifted down by `off` (negative shifts up); vacated rows are zero.
template <typename T>
TensorT<T> shift_rows(const TensorT<T>& a, int off) {
  require(a.rank() == 2, "shift_rows expects 2-D tensor");
  int R = a.shape[0], C = a.shape[1];
  TensorT<T> out({R, C});
  for (int r = 0; r < R; ++r) {
    int src = r - off;
    if (src < 0 || src >= R) continue;
    std::copy(a.data.begin() + int64_t(src) * C,
              a.data.begin() + int64_t(src + 1) * C,
              out.data.begin() + int64_t(r) * C);
  }
  return out;
}

// Depthwise temporal smoothing with a single shared odd-length kernel and
// replicate padding, so a constant input stays constant when the kernel taps
// sum to one.
template <typename T>
TensorT<T> smooth1d(const TensorT<T>& x, const TensorT<T>& kernel) {
  require(x.rank() == 2, "smooth1d expects 2-D input");
  require(kernel.rank() == 1 && kernel.shape[0] % 2 == 1,
          "smooth1d kernel must be 1-D with odd length");
  int Tn = x.shape[0], C = x.shape[1], L = kernel.shape[0], P = (L - 1) / 2;
  TensorT<T> out({Tn, C});
  for (int t = 0; t < Tn; ++t) {
    for (int j = 0; j < L; ++j) {
      int s = std::clamp(t + j - P, 0, Tn - 1);
      T kj = kernel.data[size_t(j)];
      const T* xr = x.data.data() + int64_t(s) * C;
      T* orow = out.data.data() + int64_t(t) * C;
      for (int c = 0; c < C; ++c) orow[c] += kj * xr[c];
    }
  }
  return out;
}

}  // namespace scwr
