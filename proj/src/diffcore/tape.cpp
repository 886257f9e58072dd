// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/diffcore/tape.hpp"

#include <algorithm>

namespace vawm::diffcore {

template <typename T>
std::size_t ParameterStore<T>::add(std::string name, NdArray<T> value) {
  for (const auto& p : params_) {
    if (p.name == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  NdArray<T> grad(value.shape());
  params_.push_back(Parameter<T>{std::move(name), std::move(value), std::move(grad)});
  return params_.size() - 1;
}

template <typename T>
std::size_t ParameterStore<T>::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
std::size_t ParameterStore<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.grad.fill(T(0));
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::parameter: return "parameter";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::scale: return "scale";
    case OpKind::add_row: return "add_row";
    case OpKind::matmul: return "matmul";
    case OpKind::linear: return "linear";
    case OpKind::transpose: return "transpose";
    case OpKind::softmax: return "softmax";
    case OpKind::layer_norm: return "layer_norm";
    case OpKind::silu: return "silu";
    case OpKind::tanh: return "tanh";
    case OpKind::relu: return "relu";
    case OpKind::square: return "square";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::concat_rows: return "concat_rows";
    case OpKind::slice_rows: return "slice_rows";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::gather_rows: return "gather_rows";
    case OpKind::reshape: return "reshape";
    case OpKind::attention: return "attention";
    case OpKind::modulate: return "modulate";
    case OpKind::weighted_sse: return "weighted_sse";
  }
  return "unknown";
}

template <typename T>
Var<T> Tape<T>::constant(NdArray<T> value) {
  return record(OpKind::leaf, std::move(value), {}, nullptr);
}

template <typename T>
Var<T> Tape<T>::variable(NdArray<T> value) {
  Var<T> v = record(OpKind::leaf, std::move(value), {}, nullptr);
  nodes_[v.id].requires_grad = true;
  return v;
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  Var<T> v = record(OpKind::parameter, p.value, {}, nullptr);
  nodes_[v.id].requires_grad = true;
  nodes_[v.id].param = &p;
  return v;
}

template <typename T>
Var<T> Tape<T>::record(OpKind op, NdArray<T> value, std::vector<std::size_t> parents,
                       BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by ") + op_name(op) + " " +
                         shape_str(value.shape()));
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.requires_grad =
      std::any_of(parents.begin(), parents.end(), [&](std::size_t p) { return nodes_[p].requires_grad; });
  if (node.requires_grad) node.backward = std::move(backward);
  node.parents = std::move(parents);
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
NdArray<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = NdArray<T>(n.value.shape());
  return n.grad;
}

template <typename T>
NdArray<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return NdArray<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_str(nodes_[loss.id].value.shape()));
  }
  if (backward_done_) throw ContractError("backward: tape already consumed");
  backward_done_ = true;
  grad_buffer(loss.id).fill(T(1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      auto& dst = n.param->grad.values();
      const auto& src = n.grad.values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    // Only leaf variables keep their gradient for grad().
    if (n.op != OpKind::leaf) n.grad = NdArray<T>();
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace vawm::diffcore
