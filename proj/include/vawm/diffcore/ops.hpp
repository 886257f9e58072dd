// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "vawm/diffcore/tape.hpp"

namespace vawm::diffcore {

// Elementwise ops require identical shapes.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
/// a[r, :] + row[0, :] for every row r; row has shape [cols] or [1, cols].
template <typename T> Var<T> add_row(Var<T> a, Var<T> row);

/// [m x k] . [k x n] -> [m x n].
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// x . W + b with x folded to [rows x in], W [in x out], b [out].
template <typename T> Var<T> linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias);
template <typename T> Var<T> transpose(Var<T> a);

/// Numerically stable softmax along `axis` (max subtracted first).
template <typename T> Var<T> softmax(Var<T> x, std::size_t axis);
/// Normalize each row over the last axis, then optional affine.
template <typename T>
Var<T> layer_norm(Var<T> x, std::optional<Var<T>> gain, std::optional<Var<T>> bias, T eps);

template <typename T> Var<T> silu(Var<T> x);
template <typename T> Var<T> tanh(Var<T> x);
template <typename T> Var<T> relu(Var<T> x);
template <typename T> Var<T> square(Var<T> x);
template <typename T> Var<T> sum(Var<T> x);
template <typename T> Var<T> mean(Var<T> x);
/// sum_i w_i * (a_i - b_i)^2 with a constant weight array w.
template <typename T> Var<T> weighted_sse(Var<T> a, Var<T> b, const NdArray<T>& weights);

template <typename T> Var<T> concat_rows(const std::vector<Var<T>>& parts);
template <typename T> Var<T> slice_rows(Var<T> a, std::size_t start, std::size_t count);
template <typename T> Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t count);
/// out[i, :] = a[index[i], :]; backward scatters (adds) into a.
template <typename T> Var<T> gather_rows(Var<T> a, const std::vector<std::size_t>& index);
template <typename T> Var<T> reshape(Var<T> a, Shape shape);

/// x * (1 + scale) + shift, all of identical shape.
template <typename T> Var<T> modulate(Var<T> x, Var<T> shift, Var<T> scale);

/// Boolean attention mask: allowed[q * keys + k]. Empty means all allowed.
struct AttentionMask {
  std::size_t queries = 0;
  std::size_t keys = 0;
  std::vector<std::uint8_t> allowed;

  bool empty() const { return allowed.empty(); }
  std::size_t blocked_count() const;
};

/// Multi-head scaled dot-product attention over `batch` independent
/// sequences stacked along rows: q is [batch*Lq x d], k and v are
/// [batch*Lk x d]. Blocked entries are excluded before the softmax.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t heads, std::size_t batch,
                 const AttentionMask& mask);

// Plain-array helpers shared by forward kernels and tests.
template <typename T> NdArray<T> matmul_values(const NdArray<T>& a, const NdArray<T>& b);
template <typename T> NdArray<T> transpose_values(const NdArray<T>& a);

}  // namespace vawm::diffcore
