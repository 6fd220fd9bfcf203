// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "mvvt/tensor.hpp"

namespace mvvt {

/// Append-only record of differentiable operations. Nodes are stored in
/// execution order, so the sequence is topologically sorted by construction
/// and the reverse pass is a single backwards sweep that visits each node at
/// most once.
///
/// A tape is confined to one thread. Ops record onto the thread's current
/// tape (see TapeScope); with no active tape a forward pass records nothing.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const std::vector<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int32_t record(int64_t out_numel, BackwardFn fn) {
    nodes_.push_back(Node{out_numel, {}, std::move(fn)});
    return static_cast<int32_t>(nodes_.size()) - 1;
  }

  /// Adds into a node's output-gradient buffer, allocating it on first use.
  void accumulate(int32_t node, const T* g, int64_t n);

  /// Reverse sweep from a scalar loss. Leaf tensors (requires_grad) receive
  /// accumulated gradients; calling backward again re-propagates and the
  /// leaf gradients add up.
  void backward(const Tensor<T>& loss);

  /// Drops all nodes and invalidates node references held by tensors.
  void clear() {
    nodes_.clear();
    ++generation_;
  }

  uint64_t generation() const { return generation_; }
  size_t size() const { return nodes_.size(); }

  static Tape<T>* current() { return current_; }

 private:
  struct Node {
    int64_t numel;
    std::vector<T> grad;  // empty until a consumer contributes
    BackwardFn fn;
  };

  std::vector<Node> nodes_;
  uint64_t generation_ = 1;

  static thread_local Tape<T>* current_;

  template <class U>
  friend class TapeScope;
};

/// RAII activation of a tape as the thread's recording target.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : prev_(Tape<T>::current_) { Tape<T>::current_ = &tape; }
  ~TapeScope() { Tape<T>::current_ = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* prev_;
};

/// True when an op consuming `x` must record a backward edge.
template <class T>
inline bool tracked(const Tensor<T>& x, const Tape<T>* tape) {
  if (!tape) return false;
  if (x.node >= 0 && x.tape_generation == tape->generation()) return true;
  return x.requires_grad();
}

/// Routes a gradient contribution either to the producing node or, for leaf
/// tensors, straight into the tensor's gradient buffer.
template <class T>
inline void propagate(Tape<T>& tape, Tensor<T>& input, const T* g, int64_t n) {
  if (input.node >= 0 && input.tape_generation == tape.generation()) {
    tape.accumulate(input.node, g, n);
  } else if (input.requires_grad()) {
    input.accumulate_grad(g, n);
  }
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace mvvt
