// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mvvt/errors.hpp"

namespace mvvt {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major n-dimensional array. Tensor is a cheap handle: copies
/// share the underlying value and gradient buffers. Values are treated as
/// immutable once a tensor participates in a forward pass; the optimizer
/// mutates parameter data between steps through data().
///
/// `node`/`tape_generation` link a tensor to the computation record that
/// produced it. They are managed by the ops in ops.hpp.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value);
  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t extent(int64_t axis) const { return shape_[static_cast<size_t>(axis)]; }
  int64_t numel() const { return numel_; }
  bool defined() const { return storage_ != nullptr; }

  const T* data() const { return storage_->data(); }
  T* data() { return storage_->data(); }
  const std::vector<T>& values() const { return *storage_; }

  T item() const;  // numel()==1 convenience

  bool requires_grad() const { return requires_grad_; }
  /// Marking a tensor as a differentiable leaf allocates its gradient
  /// buffer so that all existing copies share it.
  Tensor& set_requires_grad(bool rg);

  bool has_grad_buffer() const { return grad_ != nullptr; }
  const T* grad_data() const;
  std::vector<T> grad_or_zeros() const;
  void zero_grad();
  void accumulate_grad(const T* g, int64_t n);

  int32_t node = -1;
  uint64_t tape_generation = 0;

 private:
  Shape shape_;
  int64_t numel_ = 0;
  std::shared_ptr<std::vector<T>> storage_;
  std::shared_ptr<std::vector<T>> grad_;
  bool requires_grad_ = false;
};

/// Debug dump: header "shape: e1 e2 ...", then one value per line with 17
/// significant digits (round-trip exact in double).
template <class T>
void dump_tensor(std::ostream& os, const Tensor<T>& t);

template <class T>
Tensor<T> parse_tensor(std::istream& is);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace mvvt
