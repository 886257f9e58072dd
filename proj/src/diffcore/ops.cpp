// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

namespace vawm::diffcore {
namespace {

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

template <typename T>
void require_rank2(const char* op, Var<T> a) {
  if (a.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
  }
}

template <typename T>
void axpy(NdArray<T>& dst, const NdArray<T>& src, T alpha = T(1)) {
  T* d = dst.ptr();
  const T* s = src.ptr();
  const std::size_t n = dst.size();
  for (std::size_t i = 0; i < n; ++i) d[i] += alpha * s[i];
}

// C[rows x n] += L . R with L(r, q) = l[r * rs + q * qs] and R row-major [inner x n].
// Every element accumulates over q in increasing order.
template <typename T>
void gemm_kernel(std::size_t rows, std::size_t inner, std::size_t n, const T* l, std::size_t rs, std::size_t qs,
                 const T* rm, T* c) {
  typedef T V __attribute__((vector_size(32)));
  constexpr std::size_t lanes = sizeof(V) / sizeof(T), W = 2 * lanes;
  auto load = [](const T* p) {
    V v;
    std::memcpy(&v, p, sizeof(V));
    return v;
  };
  auto store = [](T* p, const V& v) { std::memcpy(p, &v, sizeof(V)); };
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const T* l0 = l + r * rs;
    std::size_t j0 = 0;
    for (; j0 + W <= n; j0 += W) {
      T* c0 = c + r * n + j0;
      V a0 = load(c0), b0 = load(c0 + lanes);
      V a1 = load(c0 + n), b1 = load(c0 + n + lanes);
      V a2 = load(c0 + 2 * n), b2 = load(c0 + 2 * n + lanes);
      V a3 = load(c0 + 3 * n), b3 = load(c0 + 3 * n + lanes);
      for (std::size_t q = 0; q < inner; ++q) {
        const T* rr = rm + q * n + j0;
        const V x = load(rr), y = load(rr + lanes);
        const T* lq = l0 + q * qs;
        const T s0 = lq[0], s1 = lq[rs], s2 = lq[2 * rs], s3 = lq[3 * rs];
        a0 += s0 * x, b0 += s0 * y;
        a1 += s1 * x, b1 += s1 * y;
        a2 += s2 * x, b2 += s2 * y;
        a3 += s3 * x, b3 += s3 * y;
      }
      store(c0, a0), store(c0 + lanes, b0);
      store(c0 + n, a1), store(c0 + n + lanes, b1);
      store(c0 + 2 * n, a2), store(c0 + 2 * n + lanes, b2);
      store(c0 + 3 * n, a3), store(c0 + 3 * n + lanes, b3);
    }
    if (j0 < n) {
      for (std::size_t i = 0; i < 4; ++i) {
        T* crow = c + (r + i) * n;
        for (std::size_t q = 0; q < inner; ++q) {
          const T s0 = l0[i * rs + q * qs];
          const T* rr = rm + q * n;
          for (std::size_t j = j0; j < n; ++j) crow[j] += s0 * rr[j];
        }
      }
    }
  }
  for (; r < rows; ++r) {
    T* crow = c + r * n;
    for (std::size_t q = 0; q < inner; ++q) {
      const T s0 = l[r * rs + q * qs];
      const T* rr = rm + q * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s0 * rr[j];
    }
  }
}

// C[m x n] += A[m x k] . B[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c) {
  gemm_kernel(m, k, n, a, k, 1, b, c);
}

// C[k x n] += A[m x k]^T . G[m x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* g, T* c) {
  gemm_kernel(k, m, n, a, 1, k, g, c);
}

// C[m x k] += G[m x n] . B[k x n]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* g, const T* b, T* c) {
  std::vector<T> bt(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  }
  gemm_nn(m, n, k, g, bt.data(), c);
}

template <typename T>
Shape with_last(const Shape& s, std::size_t last) {
  Shape out = s;
  out.back() = last;
  return out;
}

template <typename T>
Var<T> unary(Var<T> x, OpKind op, T (*f)(T), T (*df)(T x, T y)) {
  const auto& xv = x.value();
  NdArray<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  const std::size_t xid = x.id;
  return x.tape->record(op, std::move(y), {xid}, [xid, df](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    const auto& yv = t.node(self).value;
    const auto& xv2 = t.node(xid).value;
    auto& dx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * df(xv2[i], yv[i]);
  });
}

}  // namespace

std::size_t AttentionMask::blocked_count() const {
  return static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), std::uint8_t{0}));
}

template <typename T>
NdArray<T> matmul_values(const NdArray<T>& a, const NdArray<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
  }
  NdArray<T> c({a.dim(0), b.dim(1)});
  gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.ptr(), b.ptr(), c.ptr());
  return c;
}

template <typename T>
NdArray<T> transpose_values(const NdArray<T>& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + shape_str(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  NdArray<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  }
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  NdArray<T> y = a.value();
  axpy(y, b.value());
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(OpKind::add, std::move(y), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (t.requires_grad(ai)) axpy(t.grad_buffer(ai), g);
    if (t.requires_grad(bi)) axpy(t.grad_buffer(bi), g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  NdArray<T> y = a.value();
  axpy(y, b.value(), T(-1));
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(OpKind::sub, std::move(y), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (t.requires_grad(ai)) axpy(t.grad_buffer(ai), g);
    if (t.requires_grad(bi)) axpy(t.grad_buffer(bi), g, T(-1));
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  NdArray<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(OpKind::mul, std::move(y), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (t.requires_grad(ai)) {
      auto& da = t.grad_buffer(ai);
      const auto& bv2 = t.node(bi).value;
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv2[i];
    }
    if (t.requires_grad(bi)) {
      auto& db = t.grad_buffer(bi);
      const auto& av2 = t.node(ai).value;
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av2[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  NdArray<T> y = a.value();
  for (auto& v : y.values()) v *= factor;
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::scale, std::move(y), {ai}, [ai, factor](Tape<T>& t, std::size_t self) {
    axpy(t.grad_buffer(ai), t.node(self).grad, factor);
  });
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
  const std::size_t c = a.cols();
  if (row.value().size() != c) {
    throw DimensionError("add_row: row " + shape_str(row.shape()) + " does not match " + shape_str(a.shape()));
  }
  NdArray<T> y = a.value();
  const auto& rv = row.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    T* yr = y.ptr() + r * c;
    for (std::size_t j = 0; j < c; ++j) yr[j] += rv[j];
  }
  const std::size_t ai = a.id, ri = row.id;
  return a.tape->record(OpKind::add_row, std::move(y), {ai, ri}, [ai, ri, c](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (t.requires_grad(ai)) axpy(t.grad_buffer(ai), g);
    if (t.requires_grad(ri)) {
      auto& dr = t.grad_buffer(ri);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const T* gr = g.ptr() + r * c;
        for (std::size_t j = 0; j < c; ++j) dr[j] += gr[j];
      }
    }
  });
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  NdArray<T> y = matmul_values(a.value(), b.value());
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(OpKind::matmul, std::move(y), {ai, bi}, [ai, bi](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    const auto& av = t.node(ai).value;
    const auto& bv = t.node(bi).value;
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    if (t.requires_grad(ai)) gemm_nt(m, n, k, g.ptr(), bv.ptr(), t.grad_buffer(ai).ptr());
    if (t.requires_grad(bi)) gemm_tn(m, k, n, av.ptr(), g.ptr(), t.grad_buffer(bi).ptr());
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias) {
  require_rank2("linear", weight);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const std::size_t in = wv.dim(0), out = wv.dim(1);
  if (xv.cols() != in) {
    throw DimensionError("linear: input " + shape_str(xv.shape()) + " does not match weight " +
                         shape_str(wv.shape()));
  }
  if (bias && bias->value().size() != out) {
    throw DimensionError("linear: bias " + shape_str(bias->shape()) + " does not match weight " +
                         shape_str(wv.shape()));
  }
  const std::size_t rows = xv.rows();
  NdArray<T> y(with_last<T>(xv.shape(), out));
  if (bias) {
    const auto& bv = bias->value();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bv.ptr(), bv.ptr() + out, y.ptr() + r * out);
  }
  gemm_nn(rows, in, out, xv.ptr(), wv.ptr(), y.ptr());
  const std::size_t xi = x.id, wi = weight.id;
  const bool has_bias = bias.has_value();
  const std::size_t bi = has_bias ? bias->id : 0;
  std::vector<std::size_t> parents{xi, wi};
  if (has_bias) parents.push_back(bi);
  return x.tape->record(
      OpKind::linear, std::move(y), std::move(parents),
      [xi, wi, bi, has_bias, rows, in, out](Tape<T>& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        if (t.requires_grad(xi)) {
          gemm_nt(rows, out, in, g.ptr(), t.node(wi).value.ptr(), t.grad_buffer(xi).ptr());
        }
        if (t.requires_grad(wi)) {
          gemm_tn(rows, in, out, t.node(xi).value.ptr(), g.ptr(), t.grad_buffer(wi).ptr());
        }
        if (has_bias && t.requires_grad(bi)) {
          auto& db = t.grad_buffer(bi);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.ptr() + r * out;
            for (std::size_t j = 0; j < out; ++j) db[j] += gr[j];
          }
        }
      });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  NdArray<T> y = transpose_values(a.value());
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::transpose, std::move(y), {ai}, [ai](Tape<T>& t, std::size_t self) {
    axpy(t.grad_buffer(ai), transpose_values(t.node(self).grad));
  });
}

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  const auto& xv = x.value();
  NdArray<T> y(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      T mx = xv[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      T total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const T e = std::exp(xv[base + j * inner] - mx);
        y[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) y[base + j * inner] /= total;
    }
  }
  const std::size_t xi = x.id;
  return x.tape->record(OpKind::softmax, std::move(y), {xi}, [xi, outer, inner, n](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    const auto& yv = t.node(self).value;
    auto& dx = t.grad_buffer(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * yv[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = base + j * inner;
          dx[k] += yv[k] * (g[k] - dot);
        }
      }
    }
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, std::optional<Var<T>> gain, std::optional<Var<T>> bias, T eps) {
  if (!(eps > T(0))) throw ParameterError("layer_norm: eps must be positive");
  const std::size_t n = x.cols();
  const std::size_t rows = x.value().rows();
  if (gain && gain->value().size() != n) {
    throw DimensionError("layer_norm: gain " + shape_str(gain->shape()) + " does not match " + shape_str(x.shape()));
  }
  if (bias && bias->value().size() != n) {
    throw DimensionError("layer_norm: bias " + shape_str(bias->shape()) + " does not match " + shape_str(x.shape()));
  }
  const auto& xv = x.value();
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  NdArray<T> y(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.ptr() + r * n;
    T mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= T(n);
    T var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= T(n);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (xr[j] - mu) * is;
      (*xhat)[r * n + j] = h;
      T v = h;
      if (gain) v *= gain->value()[j];
      if (bias) v += bias->value()[j];
      y[r * n + j] = v;
    }
  }
  const std::size_t xi = x.id;
  const bool has_gain = gain.has_value(), has_bias = bias.has_value();
  const std::size_t gi = has_gain ? gain->id : 0, bi = has_bias ? bias->id : 0;
  std::vector<std::size_t> parents{xi};
  if (has_gain) parents.push_back(gi);
  if (has_bias) parents.push_back(bi);
  return x.tape->record(
      OpKind::layer_norm, std::move(y), std::move(parents),
      [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        const T* gainv = has_gain ? t.node(gi).value.ptr() : nullptr;
        if (has_gain && t.requires_grad(gi)) {
          auto& dg = t.grad_buffer(gi);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) dg[j] += g[r * n + j] * (*xhat)[r * n + j];
        }
        if (has_bias && t.requires_grad(bi)) {
          auto& db = t.grad_buffer(bi);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) db[j] += g[r * n + j];
        }
        if (!t.requires_grad(xi)) return;
        auto& dx = t.grad_buffer(xi);
        std::vector<T> dh(n);
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_dh = 0, mean_dhh = 0;
          for (std::size_t j = 0; j < n; ++j) {
            dh[j] = g[r * n + j] * (gainv ? gainv[j] : T(1));
            mean_dh += dh[j];
            mean_dhh += dh[j] * (*xhat)[r * n + j];
          }
          mean_dh /= T(n);
          mean_dhh /= T(n);
          const T is = (*inv_std)[r];
          for (std::size_t j = 0; j < n; ++j) {
            dx[r * n + j] += is * (dh[j] - mean_dh - (*xhat)[r * n + j] * mean_dhh);
          }
        }
      });
}

template <typename T>
Var<T> silu(Var<T> x) {
  return unary<T>(
      x, OpKind::silu, [](T v) { return v / (T(1) + std::exp(-v)); },
      [](T v, T) {
        const T sg = T(1) / (T(1) + std::exp(-v));
        return sg * (T(1) + v * (T(1) - sg));
      });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  return unary<T>(
      x, OpKind::tanh, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return unary<T>(
      x, OpKind::relu, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> square(Var<T> x) {
  return unary<T>(
      x, OpKind::square, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().values()) total += v;
  const std::size_t xi = x.id;
  return x.tape->record(OpKind::sum, NdArray<T>::scalar(total), {xi}, [xi](Tape<T>& t, std::size_t self) {
    const T g = t.node(self).grad[0];
    for (auto& v : t.grad_buffer(xi).values()) v += g;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const T inv = T(1) / T(x.value().size());
  T total = 0;
  for (T v : x.value().values()) total += v;
  const std::size_t xi = x.id;
  return x.tape->record(OpKind::mean, NdArray<T>::scalar(total * inv), {xi},
                        [xi, inv](Tape<T>& t, std::size_t self) {
                          const T g = t.node(self).grad[0] * inv;
                          for (auto& v : t.grad_buffer(xi).values()) v += g;
                        });
}

template <typename T>
Var<T> weighted_sse(Var<T> a, Var<T> b, const NdArray<T>& weights) {
  require_same_shape("weighted_sse", a, b);
  if (weights.size() != a.value().size()) {
    throw DimensionError("weighted_sse: weights " + shape_str(weights.shape()) + " do not match " +
                         shape_str(a.shape()));
  }
  const auto& av = a.value();
  const auto& bv = b.value();
  T total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const T d = av[i] - bv[i];
    total += weights[i] * d * d;
  }
  const std::size_t ai = a.id, bi = b.id;
  auto w = std::make_shared<NdArray<T>>(weights);
  return a.tape->record(OpKind::weighted_sse, NdArray<T>::scalar(total), {ai, bi},
                        [ai, bi, w](Tape<T>& t, std::size_t self) {
                          const T g = t.node(self).grad[0];
                          const auto& av2 = t.node(ai).value;
                          const auto& bv2 = t.node(bi).value;
                          const bool ga = t.requires_grad(ai), gb = t.requires_grad(bi);
                          for (std::size_t i = 0; i < av2.size(); ++i) {
                            const T d = T(2) * g * (*w)[i] * (av2[i] - bv2[i]);
                            if (ga) t.grad_buffer(ai)[i] += d;
                            if (gb) t.grad_buffer(bi)[i] -= d;
                          }
                        });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, offsets;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("concat_rows: column mismatch " + shape_str(parts.front().shape()) + " vs " +
                           shape_str(p.shape()));
    }
    offsets.push_back(rows);
    ids.push_back(p.id);
    rows += p.value().rows();
  }
  NdArray<T> y({rows, c});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = parts[i].value();
    std::copy(v.ptr(), v.ptr() + v.size(), y.ptr() + offsets[i] * c);
  }
  return parts.front().tape->record(OpKind::concat_rows, std::move(y), ids,
                                    [ids, offsets, c](Tape<T>& t, std::size_t self) {
                                      const auto& g = t.node(self).grad;
                                      for (std::size_t i = 0; i < ids.size(); ++i) {
                                        if (!t.requires_grad(ids[i])) continue;
                                        auto& d = t.grad_buffer(ids[i]);
                                        const T* src = g.ptr() + offsets[i] * c;
                                        for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[j];
                                      }
                                    });
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t start, std::size_t count) {
  const std::size_t rows = a.value().rows(), c = a.cols();
  if (count == 0 || start + count > rows) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                         shape_str(a.shape()));
  }
  const auto& av = a.value();
  NdArray<T> y({count, c}, std::vector<T>(av.ptr() + start * c, av.ptr() + (start + count) * c));
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::slice_rows, std::move(y), {ai}, [ai, start, c](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    T* d = t.grad_buffer(ai).ptr() + start * c;
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += g[j];
  });
}

template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t count) {
  require_rank2("slice_cols", a);
  const std::size_t rows = a.rows(), c = a.cols();
  if (count == 0 || start + count > c) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                         shape_str(a.shape()));
  }
  const auto& av = a.value();
  NdArray<T> y({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(av.ptr() + r * c + start, av.ptr() + r * c + start + count, y.ptr() + r * count);
  }
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::slice_cols, std::move(y), {ai},
                        [ai, start, count, rows, c](Tape<T>& t, std::size_t self) {
                          const auto& g = t.node(self).grad;
                          auto& d = t.grad_buffer(ai);
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < count; ++j) d[r * c + start + j] += g[r * count + j];
                        });
}

template <typename T>
Var<T> gather_rows(Var<T> a, const std::vector<std::size_t>& index) {
  const std::size_t rows = a.value().rows(), c = a.cols();
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  NdArray<T> y({index.size(), c});
  const auto& av = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) throw DimensionError("gather_rows: row index out of range for " + shape_str(a.shape()));
    std::copy(av.ptr() + index[i] * c, av.ptr() + (index[i] + 1) * c, y.ptr() + i * c);
  }
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::gather_rows, std::move(y), {ai}, [ai, index, c](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    auto& d = t.grad_buffer(ai);
    for (std::size_t i = 0; i < index.size(); ++i) {
      T* dr = d.ptr() + index[i] * c;
      const T* gr = g.ptr() + i * c;
      for (std::size_t j = 0; j < c; ++j) dr[j] += gr[j];
    }
  });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  NdArray<T> y = a.value().reshaped(std::move(shape));
  const std::size_t ai = a.id;
  return a.tape->record(OpKind::reshape, std::move(y), {ai}, [ai](Tape<T>& t, std::size_t self) {
    auto& d = t.grad_buffer(ai);
    const auto& g = t.node(self).grad;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += g[j];
  });
}

template <typename T>
Var<T> modulate(Var<T> x, Var<T> shift, Var<T> scale_v) {
  require_same_shape("modulate", x, shift);
  require_same_shape("modulate", x, scale_v);
  const auto& xv = x.value();
  const auto& sh = shift.value();
  const auto& sc = scale_v.value();
  NdArray<T> y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * (T(1) + sc[i]) + sh[i];
  const std::size_t xi = x.id, hi = shift.id, ci = scale_v.id;
  return x.tape->record(OpKind::modulate, std::move(y), {xi, hi, ci}, [xi, hi, ci](Tape<T>& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (t.requires_grad(xi)) {
      auto& dx = t.grad_buffer(xi);
      const auto& sc2 = t.node(ci).value;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (T(1) + sc2[i]);
    }
    if (t.requires_grad(hi)) axpy(t.grad_buffer(hi), g);
    if (t.requires_grad(ci)) {
      auto& dc = t.grad_buffer(ci);
      const auto& xv2 = t.node(xi).value;
      for (std::size_t i = 0; i < g.size(); ++i) dc[i] += g[i] * xv2[i];
    }
  });
}

namespace {

// Copies head `h` of sample `b` out of a [batch*L x d] matrix into [L x dh].
template <typename T>
void gather_head(const NdArray<T>& m, std::size_t b, std::size_t len, std::size_t h, std::size_t dh,
                 std::vector<T>& out) {
  const std::size_t d = m.cols();
  out.resize(len * dh);
  for (std::size_t i = 0; i < len; ++i) {
    const T* src = m.ptr() + (b * len + i) * d + h * dh;
    std::copy(src, src + dh, out.data() + i * dh);
  }
}

template <typename T>
void scatter_head_add(NdArray<T>& m, std::size_t b, std::size_t len, std::size_t h, std::size_t dh,
                      const std::vector<T>& in) {
  const std::size_t d = m.cols();
  for (std::size_t i = 0; i < len; ++i) {
    T* dst = m.ptr() + (b * len + i) * d + h * dh;
    for (std::size_t j = 0; j < dh; ++j) dst[j] += in[i * dh + j];
  }
}

}  // namespace

template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t heads, std::size_t batch, const AttentionMask& mask) {
  require_rank2("attention", q);
  require_rank2("attention", k);
  require_same_shape("attention", k, v);
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0 || k.cols() != d) {
    throw DimensionError("attention: width " + std::to_string(d) + " incompatible with " + std::to_string(heads) +
                         " heads / key width " + std::to_string(k.cols()));
  }
  if (batch == 0 || q.rows() % batch != 0 || k.rows() % batch != 0) {
    throw DimensionError("attention: rows not divisible by batch " + std::to_string(batch));
  }
  const std::size_t lq = q.rows() / batch, lk = k.rows() / batch, dh = d / heads;
  if (!mask.empty() && (mask.queries != lq || mask.keys != lk || mask.allowed.size() != lq * lk)) {
    throw DimensionError("attention: mask " + std::to_string(mask.queries) + "x" + std::to_string(mask.keys) +
                         " does not match " + std::to_string(lq) + "x" + std::to_string(lk));
  }
  const T scl = T(1) / std::sqrt(T(dh));
  auto probs = std::make_shared<std::vector<T>>(batch * heads * lq * lk);
  NdArray<T> y({batch * lq, d});
  std::vector<T> qh, kh, vh, kt(dh * lk), out(lq * dh);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      gather_head(q.value(), b, lq, h, dh, qh);
      gather_head(k.value(), b, lk, h, dh, kh);
      gather_head(v.value(), b, lk, h, dh, vh);
      for (auto& x : qh) x *= scl;
      for (std::size_t j = 0; j < lk; ++j)
        for (std::size_t p = 0; p < dh; ++p) kt[p * lk + j] = kh[j * dh + p];
      T* pb = probs->data() + (b * heads + h) * lq * lk;
      gemm_kernel(lq, dh, lk, qh.data(), dh, 1, kt.data(), pb);
      for (std::size_t i = 0; i < lq; ++i) {
        T* row = pb + i * lk;
        const std::uint8_t* allow = mask.empty() ? nullptr : mask.allowed.data() + i * lk;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < lk; ++j) {
          if (!allow || allow[j]) mx = std::max(mx, row[j]);
        }
        if (!std::isfinite(mx)) throw ContractError("attention: query row with every key blocked");
        T total = 0;
        for (std::size_t j = 0; j < lk; ++j) {
          const T e = (!allow || allow[j]) ? std::exp(row[j] - mx) : T(0);
          row[j] = e;
          total += e;
        }
        const T inv = T(1) / total;
        for (std::size_t j = 0; j < lk; ++j) row[j] *= inv;
      }
      std::fill(out.begin(), out.end(), T(0));
      gemm_kernel(lq, lk, dh, pb, lk, 1, vh.data(), out.data());
      scatter_head_add(y, b, lq, h, dh, out);
    }
  }
  const std::size_t qi = q.id, ki = k.id, vi = v.id;
  return q.tape->record(
      OpKind::attention, std::move(y), {qi, ki, vi},
      [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        const bool gq = t.requires_grad(qi), gk = t.requires_grad(ki), gv = t.requires_grad(vi);
        std::vector<T> qh2, kh2, vh2, go, vt(dh * lk), ds(lq * lk), dq(lq * dh), dk(lk * dh), dv(lk * dh);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            gather_head(t.node(qi).value, b, lq, h, dh, qh2);
            gather_head(t.node(ki).value, b, lk, h, dh, kh2);
            gather_head(t.node(vi).value, b, lk, h, dh, vh2);
            gather_head(g, b, lq, h, dh, go);
            for (std::size_t j = 0; j < lk; ++j)
              for (std::size_t p = 0; p < dh; ++p) vt[p * lk + j] = vh2[j * dh + p];
            const T* pb = probs->data() + (b * heads + h) * lq * lk;
            if (gv) {
              std::fill(dv.begin(), dv.end(), T(0));
              gemm_kernel(lk, lq, dh, pb, 1, lk, go.data(), dv.data());
              scatter_head_add(t.grad_buffer(vi), b, lk, h, dh, dv);
            }
            if (!gq && !gk) continue;
            std::fill(ds.begin(), ds.end(), T(0));
            gemm_kernel(lq, dh, lk, go.data(), dh, 1, vt.data(), ds.data());
            for (std::size_t i = 0; i < lq; ++i) {
              const T* prow = pb + i * lk;
              T* drow = ds.data() + i * lk;
              T dot = 0;
              for (std::size_t j = 0; j < lk; ++j) dot += prow[j] * drow[j];
              for (std::size_t j = 0; j < lk; ++j) drow[j] = prow[j] * (drow[j] - dot) * scl;
            }
            if (gq) {
              std::fill(dq.begin(), dq.end(), T(0));
              gemm_kernel(lq, lk, dh, ds.data(), lk, 1, kh2.data(), dq.data());
              scatter_head_add(t.grad_buffer(qi), b, lq, h, dh, dq);
            }
            if (gk) {
              std::fill(dk.begin(), dk.end(), T(0));
              gemm_kernel(lk, lq, dh, ds.data(), 1, lk, qh2.data(), dk.data());
              scatter_head_add(t.grad_buffer(ki), b, lk, h, dh, dk);
            }
          }
        }
      });
}

#define VAWM_INSTANTIATE_OPS(T)                                                                  \
  template Var<T> add<T>(Var<T>, Var<T>);                                                        \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                        \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                        \
  template Var<T> scale<T>(Var<T>, T);                                                           \
  template Var<T> add_row<T>(Var<T>, Var<T>);                                                    \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                     \
  template Var<T> linear<T>(Var<T>, Var<T>, std::optional<Var<T>>);                              \
  template Var<T> transpose<T>(Var<T>);                                                          \
  template Var<T> softmax<T>(Var<T>, std::size_t);                                               \
  template Var<T> layer_norm<T>(Var<T>, std::optional<Var<T>>, std::optional<Var<T>>, T);        \
  template Var<T> silu<T>(Var<T>);                                                               \
  template Var<T> tanh<T>(Var<T>);                                                               \
  template Var<T> relu<T>(Var<T>);                                                               \
  template Var<T> square<T>(Var<T>);                                                             \
  template Var<T> sum<T>(Var<T>);                                                                \
  template Var<T> mean<T>(Var<T>);                                                               \
  template Var<T> weighted_sse<T>(Var<T>, Var<T>, const NdArray<T>&);                            \
  template Var<T> concat_rows<T>(const std::vector<Var<T>>&);                                    \
  template Var<T> slice_rows<T>(Var<T>, std::size_t, std::size_t);                               \
  template Var<T> slice_cols<T>(Var<T>, std::size_t, std::size_t);                               \
  template Var<T> gather_rows<T>(Var<T>, const std::vector<std::size_t>&);                       \
  template Var<T> reshape<T>(Var<T>, Shape);                                                     \
  template Var<T> modulate<T>(Var<T>, Var<T>, Var<T>);                                           \
  template Var<T> attention<T>(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t,                 \
                               const AttentionMask&);                                            \
  template NdArray<T> matmul_values<T>(const NdArray<T>&, const NdArray<T>&);                    \
  template NdArray<T> transpose_values<T>(const NdArray<T>&);

VAWM_INSTANTIATE_OPS(float)
VAWM_INSTANTIATE_OPS(double)

#undef VAWM_INSTANTIATE_OPS

}  // namespace vawm::diffcore
