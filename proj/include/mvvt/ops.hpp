// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable tensor operations. Each op validates shapes eagerly, computes
// its result, and (when a tape is active and an input is tracked) records a
// closure that routes output gradients back to the inputs.

#include <vector>

#include "mvvt/rng.hpp"
#include "mvvt/tape.hpp"
#include "mvvt/tensor.hpp"

namespace mvvt {

/// Elementwise a + b. b may be broadcast to a's shape: ranks are aligned by
/// prepending unit extents to b, after which every extent of b must equal
/// a's or be 1. The gradient of b is the output gradient summed over the
/// broadcast extents.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise a - b, same broadcast rules as add.
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise a * b, same broadcast rules as add.
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// x * c for a compile-time constant factor.
template <class T>
Tensor<T> scale(const Tensor<T>& x, T c);

/// Matrix product over the last two axes. a is (..., m, k); b is (k, n) or
/// (..., k, n) with leading extents equal to a's.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Swaps the last two axes (rank >= 2).
template <class T>
Tensor<T> transpose_last2(const Tensor<T>& x);

/// Same data, new shape with identical element count.
template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape);

/// Contiguous sub-range [start, start+len) along `axis`.
template <class T>
Tensor<T> slice(const Tensor<T>& x, int64_t axis, int64_t start, int64_t len);

/// Concatenation along `axis`; all other extents must agree.
template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int64_t axis);

/// Exp-normalization along `axis` with max subtraction.
template <class T>
Tensor<T> softmax(const Tensor<T>& x, int64_t axis);

/// Last-axis standardization followed by the affine map gamma * xhat + beta.
/// gamma and beta are 1-d with the extent of x's last axis.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);

template <class T>
Tensor<T> relu(const Tensor<T>& x);

/// tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
template <class T>
Tensor<T> gelu(const Tensor<T>& x);

/// Inverted dropout: in training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate); in eval mode
/// the op is the identity and draws nothing from `rng`. rate must be in
/// [0, 1); rate == 0 is also a draw-free identity.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, RngStream& rng);

/// Arithmetic mean along `axis`; the pooled axis is dropped from the shape.
template <class T>
Tensor<T> mean(const Tensor<T>& x, int64_t axis);

/// Mean over all elements; result has shape (1).
template <class T>
Tensor<T> mean_all(const Tensor<T>& x);

/// Non-overlapping PxP patch extraction and linear projection, equal to a
/// stride-P convolution because kernel size == stride. x is (B, C, H, W)
/// with H, W divisible by P; weight is (C*P*P, D); bias is (D). Patches are
/// flattened channel-major, i.e. index (c, dy, dx). Result is
/// (B, (H/P)*(W/P), D) with patches in row-major (py, px) order.
template <class T>
Tensor<T> patchify_project(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           int64_t patch);

/// Mean of squared differences; shapes must match exactly.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

#define MVVT_DECL_OPS(T)                                                                        \
  extern template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                        \
  extern template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                        \
  extern template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                        \
  extern template Tensor<T> scale<T>(const Tensor<T>&, T);                                     \
  extern template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                     \
  extern template Tensor<T> transpose_last2<T>(const Tensor<T>&);                              \
  extern template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                               \
  extern template Tensor<T> slice<T>(const Tensor<T>&, int64_t, int64_t, int64_t);             \
  extern template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int64_t);                 \
  extern template Tensor<T> softmax<T>(const Tensor<T>&, int64_t);                             \
  extern template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  extern template Tensor<T> relu<T>(const Tensor<T>&);                                         \
  extern template Tensor<T> gelu<T>(const Tensor<T>&);                                         \
  extern template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, RngStream&);            \
  extern template Tensor<T> mean<T>(const Tensor<T>&, int64_t);                                \
  extern template Tensor<T> mean_all<T>(const Tensor<T>&);                                     \
  extern template Tensor<T> patchify_project<T>(const Tensor<T>&, const Tensor<T>&,            \
                                                const Tensor<T>&, int64_t);                    \
  extern template Tensor<T> mse_loss<T>(const Tensor<T>&, const Tensor<T>&);

MVVT_DECL_OPS(float)
MVVT_DECL_OPS(double)
#undef MVVT_DECL_OPS

}  // namespace mvvt
