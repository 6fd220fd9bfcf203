// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvvt/ops.hpp"

namespace mvvt {

/// Central finite differences against reverse-mode gradients.
///
/// `f` must map a tensor to a scalar tensor through differentiable ops and
/// must be deterministic (re-seed any randomness inside f on every call).
/// Returns the maximum relative error over the checked coordinates, with
/// relative error |fd - ad| / max(|fd|, |ad|, 1e-8).
///
/// With max_coords >= 0 only that many coordinates are checked, chosen by a
/// stream seeded with coord_seed; otherwise every coordinate is checked.
template <class T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, T eps,
                  int64_t max_coords = -1, uint64_t coord_seed = 0);

/// Finite-difference check of several leaves against one loss closure.
/// `loss` is re-evaluated from the leaves' current values on every call.
/// Returns the max relative error across all leaves; per-leaf maxima go to
/// `per_leaf` when provided.
template <class T>
double grad_check_leaves(const std::function<Tensor<T>()>& loss,
                         const std::vector<std::pair<std::string, Tensor<T>*>>& leaves, T eps,
                         int64_t max_coords_per_leaf, uint64_t coord_seed,
                         std::vector<std::pair<std::string, double>>* per_leaf = nullptr);

/// Directional variant: per leaf, probes `dirs_per_leaf` random directions d
/// (entries uniform in [-1, 1]) and compares (loss(w + eps d) -
/// loss(w - eps d)) / 2 eps against <grad, d>. Coordinates with tiny
/// individual gradients are aggregated into a resolvable inner product, so
/// this is the right tool for whole-model sweeps where per-coordinate
/// differences sit below the rounding noise of the loss.
template <class T>
double grad_check_directional(const std::function<Tensor<T>()>& loss,
                              const std::vector<std::pair<std::string, Tensor<T>*>>& leaves, T eps,
                              int64_t dirs_per_leaf, uint64_t seed,
                              std::vector<std::pair<std::string, double>>* per_leaf = nullptr);

extern template double grad_check<float>(const std::function<Tensor<float>(const Tensor<float>&)>&,
                                         Tensor<float>, float, int64_t, uint64_t);
extern template double grad_check<double>(const std::function<Tensor<double>(const Tensor<double>&)>&,
                                          Tensor<double>, double, int64_t, uint64_t);
extern template double grad_check_leaves<double>(
    const std::function<Tensor<double>()>&,
    const std::vector<std::pair<std::string, Tensor<double>*>>&, double, int64_t, uint64_t,
    std::vector<std::pair<std::string, double>>*);
extern template double grad_check_directional<double>(
    const std::function<Tensor<double>()>&,
    const std::vector<std::pair<std::string, Tensor<double>*>>&, double, int64_t, uint64_t,
    std::vector<std::pair<std::string, double>>*);

}  // namespace mvvt
