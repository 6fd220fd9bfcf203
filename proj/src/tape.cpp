// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/tape.hpp"

namespace mvvt {

template <class T>
thread_local Tape<T>* Tape<T>::current_ = nullptr;

template <class T>
void Tape<T>::accumulate(int32_t node, const T* g, int64_t n) {
  Node& nd = nodes_[static_cast<size_t>(node)];
  if (n != nd.numel) {
    throw ShapeError("tape gradient size mismatch: got " + std::to_string(n) +
                     ", node holds " + std::to_string(nd.numel));
  }
  if (nd.grad.empty()) nd.grad.assign(static_cast<size_t>(nd.numel), T(0));
  for (int64_t i = 0; i < n; ++i) nd.grad[static_cast<size_t>(i)] += g[i];
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  }
  const T one = T(1);
  if (loss.node < 0 || loss.tape_generation != generation_) {
    if (loss.requires_grad()) {
      // Leaf used directly as loss: d loss / d loss = 1.
      const_cast<Tensor<T>&>(loss).accumulate_grad(&one, 1);
      return;
    }
    throw Error("backward: loss is not connected to this computation record");
  }
  accumulate(loss.node, &one, 1);
  for (int32_t i = loss.node; i >= 0; --i) {
    Node& nd = nodes_[static_cast<size_t>(i)];
    if (nd.grad.empty()) continue;
    std::vector<T> g = std::move(nd.grad);
    nd.grad = {};
    nd.fn(*this, g);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace mvvt
