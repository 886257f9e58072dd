// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "vawm/diffcore/ndarray.hpp"

namespace vawm::diffcore {

/// A trainable tensor with its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  NdArray<T> value;
  NdArray<T> grad;
};

/// Ordered, named parameter collection. Indices are stable for the lifetime
/// of the store, so models refer to their weights by index.
template <typename T>
class ParameterStore {
 public:
  std::size_t add(std::string name, NdArray<T> value);

  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::size_t find(const std::string& name) const;  // throws ContractError when absent
  std::size_t element_count() const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>());
    return out;
  }

 private:
  std::vector<Parameter<T>> params_;
};

enum class OpKind : std::uint8_t {
  leaf,
  parameter,
  add,
  sub,
  mul,
  scale,
  add_row,
  matmul,
  linear,
  transpose,
  softmax,
  layer_norm,
  silu,
  tanh,
  relu,
  square,
  sum,
  mean,
  concat_rows,
  slice_rows,
  slice_cols,
  gather_rows,
  reshape,
  attention,
  modulate,
  weighted_sse,
};

const char* op_name(OpKind kind);

template <typename T>
class Tape;

/// Handle to a node recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const NdArray<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, which
/// is a topological order of the graph; backward walks it in reverse.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    OpKind op = OpKind::leaf;
    NdArray<T> value;
    NdArray<T> grad;  // allocated on first contribution
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that does not receive gradients.
  Var<T> constant(NdArray<T> value);
  /// Input whose gradient is kept on the tape (see grad()).
  Var<T> variable(NdArray<T> value);
  /// Trainable leaf; backward adds its gradient into param.grad.
  Var<T> param(Parameter<T>& param);

  /// Record an op result. Throws NonFiniteError if the value holds NaN/Inf.
  Var<T> record(OpKind op, NdArray<T> value, std::vector<std::size_t> parents, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Every reachable parameter gets its
  /// gradient added into Parameter::grad.
  void backward(Var<T> loss);

  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient accumulator of a node (zero-filled on first access).
  NdArray<T>& grad_buffer(std::size_t id);
  /// Gradient after backward; zeros when the node was unreachable.
  NdArray<T> grad(Var<T> v) const;

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

template <typename T>
const NdArray<T>& Var<T>::value() const {
  return tape->node(id).value;
}

}  // namespace vawm::diffcore
