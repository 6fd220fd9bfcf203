// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/tensor.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace mvvt {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

template <class T>
Tensor<T>::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (int64_t e : shape_) {
    if (e <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
  }
  numel_ = shape_numel(shape_);
  storage_ = std::make_shared<std::vector<T>>(static_cast<size_t>(numel_), T(0));
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)) {
  for (int64_t e : shape_) {
    if (e <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
  }
  numel_ = shape_numel(shape_);
  if (numel_ != static_cast<int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape_));
  }
  storage_ = std::make_shared<std::vector<T>>(std::move(values));
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  Tensor t(std::move(shape));
  std::fill(t.storage_->begin(), t.storage_->end(), value);
  return t;
}

template <class T>
T Tensor<T>::item() const {
  if (numel_ != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape_));
  return (*storage_)[0];
}

template <class T>
Tensor<T>& Tensor<T>::set_requires_grad(bool rg) {
  requires_grad_ = rg;
  if (rg && !grad_) {
    grad_ = std::make_shared<std::vector<T>>(static_cast<size_t>(numel_), T(0));
  }
  return *this;
}

template <class T>
const T* Tensor<T>::grad_data() const {
  return grad_ ? grad_->data() : nullptr;
}

template <class T>
std::vector<T> Tensor<T>::grad_or_zeros() const {
  if (grad_) return *grad_;
  return std::vector<T>(static_cast<size_t>(numel_), T(0));
}

template <class T>
void Tensor<T>::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), T(0));
}

template <class T>
void Tensor<T>::accumulate_grad(const T* g, int64_t n) {
  if (n != numel_) {
    throw ShapeError("gradient size " + std::to_string(n) + " does not match tensor " + shape_str(shape_));
  }
  if (!grad_) grad_ = std::make_shared<std::vector<T>>(static_cast<size_t>(numel_), T(0));
  T* dst = grad_->data();
  for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
}

template <class T>
void dump_tensor(std::ostream& os, const Tensor<T>& t) {
  os << "shape:";
  for (int64_t e : t.shape()) os << " " << e;
  os << "\n";
  char buf[64];
  const T* d = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(d[i]));
    os << buf << "\n";
  }
}

template <class T>
Tensor<T> parse_tensor(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("shape:", 0) != 0) {
    throw IoError("tensor dump must start with a 'shape:' header");
  }
  std::istringstream hs(header.substr(6));
  Shape shape;
  int64_t e;
  while (hs >> e) shape.push_back(e);
  if (shape.empty()) throw IoError("tensor dump header has no extents");
  int64_t n = shape_numel(shape);
  std::vector<T> values;
  values.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double v;
    if (!(is >> v)) throw IoError("tensor dump truncated at value " + std::to_string(i));
    values.push_back(static_cast<T>(v));
  }
  return Tensor<T>(std::move(shape), std::move(values));
}

template class Tensor<float>;
template class Tensor<double>;
template void dump_tensor<float>(std::ostream&, const Tensor<float>&);
template void dump_tensor<double>(std::ostream&, const Tensor<double>&);
template Tensor<float> parse_tensor<float>(std::istream&);
template Tensor<double> parse_tensor<double>(std::istream&);

}  // namespace mvvt
