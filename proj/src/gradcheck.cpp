// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mvvt {

namespace {

double rel_error(double fd, double ad) {
  const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-8});
  return std::fabs(fd - ad) / denom;
}

std::vector<int64_t> pick_coords(int64_t numel, int64_t max_coords, uint64_t seed) {
  std::vector<int64_t> coords;
  if (max_coords < 0 || max_coords >= numel) {
    coords.resize(static_cast<size_t>(numel));
    for (int64_t i = 0; i < numel; ++i) coords[static_cast<size_t>(i)] = i;
  } else {
    RngStream rng(seed);
    coords.reserve(static_cast<size_t>(max_coords));
    for (int64_t i = 0; i < max_coords; ++i)
      coords.push_back(static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(numel))));
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  }
  return coords;
}

}  // namespace

template <class T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, T eps,
                  int64_t max_coords, uint64_t coord_seed) {
  x.set_requires_grad(true);
  x.zero_grad();
  Tape<T> tape;
  {
    TapeScope<T> scope(tape);
    Tensor<T> loss = f(x);
    tape.backward(loss);
  }
  std::vector<T> analytic = x.grad_or_zeros();

  double max_err = 0.0;
  T* data = x.data();
  for (int64_t i : pick_coords(x.numel(), max_coords, coord_seed)) {
    const T orig = data[i];
    data[i] = orig + eps;
    const double fp = static_cast<double>(f(x).item());
    data[i] = orig - eps;
    const double fm = static_cast<double>(f(x).item());
    data[i] = orig;
    const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
    max_err = std::max(max_err, rel_error(fd, static_cast<double>(analytic[static_cast<size_t>(i)])));
  }
  return max_err;
}

template <class T>
double grad_check_leaves(const std::function<Tensor<T>()>& loss,
                         const std::vector<std::pair<std::string, Tensor<T>*>>& leaves, T eps,
                         int64_t max_coords_per_leaf, uint64_t coord_seed,
                         std::vector<std::pair<std::string, double>>* per_leaf) {
  for (auto& [name, t] : leaves) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  Tape<T> tape;
  {
    TapeScope<T> scope(tape);
    Tensor<T> l = loss();
    tape.backward(l);
  }

  double max_err = 0.0;
  uint64_t leaf_id = 0;
  for (auto& [name, t] : leaves) {
    std::vector<T> analytic = t->grad_or_zeros();
    double leaf_err = 0.0;
    T* data = t->data();
    for (int64_t i : pick_coords(t->numel(), max_coords_per_leaf, RngStream::mix(coord_seed, leaf_id))) {
      const T orig = data[i];
      data[i] = orig + eps;
      const double fp = static_cast<double>(loss().item());
      data[i] = orig - eps;
      const double fm = static_cast<double>(loss().item());
      data[i] = orig;
      const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
      leaf_err = std::max(leaf_err, rel_error(fd, static_cast<double>(analytic[static_cast<size_t>(i)])));
    }
    if (per_leaf) per_leaf->emplace_back(name, leaf_err);
    max_err = std::max(max_err, leaf_err);
    ++leaf_id;
  }
  return max_err;
}

template <class T>
double grad_check_directional(const std::function<Tensor<T>()>& loss,
                              const std::vector<std::pair<std::string, Tensor<T>*>>& leaves, T eps,
                              int64_t dirs_per_leaf, uint64_t seed,
                              std::vector<std::pair<std::string, double>>* per_leaf) {
  for (auto& [name, t] : leaves) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  Tape<T> tape;
  {
    TapeScope<T> scope(tape);
    Tensor<T> l = loss();
    tape.backward(l);
  }

  double max_err = 0.0;
  uint64_t leaf_id = 0;
  for (auto& [name, t] : leaves) {
    std::vector<T> analytic = t->grad_or_zeros();
    RngStream rng(RngStream::mix(seed, leaf_id));
    double leaf_err = 0.0;
    T* data = t->data();
    const int64_t n = t->numel();
    std::vector<T> dir(static_cast<size_t>(n));
    std::vector<T> saved(static_cast<size_t>(n));
    for (int64_t r = 0; r < dirs_per_leaf; ++r) {
      double ad = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        dir[static_cast<size_t>(i)] = static_cast<T>(rng.next_uniform(-1.0, 1.0));
        saved[static_cast<size_t>(i)] = data[i];
        ad += static_cast<double>(analytic[static_cast<size_t>(i)]) *
              static_cast<double>(dir[static_cast<size_t>(i)]);
      }
      for (int64_t i = 0; i < n; ++i) data[i] = saved[static_cast<size_t>(i)] + eps * dir[static_cast<size_t>(i)];
      const double fp = static_cast<double>(loss().item());
      for (int64_t i = 0; i < n; ++i) data[i] = saved[static_cast<size_t>(i)] - eps * dir[static_cast<size_t>(i)];
      const double fm = static_cast<double>(loss().item());
      for (int64_t i = 0; i < n; ++i) data[i] = saved[static_cast<size_t>(i)];
      const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
      leaf_err = std::max(leaf_err, rel_error(fd, ad));
    }
    if (per_leaf) per_leaf->emplace_back(name, leaf_err);
    max_err = std::max(max_err, leaf_err);
    ++leaf_id;
  }
  return max_err;
}

template double grad_check<float>(const std::function<Tensor<float>(const Tensor<float>&)>&,
                                  Tensor<float>, float, int64_t, uint64_t);
template double grad_check<double>(const std::function<Tensor<double>(const Tensor<double>&)>&,
                                   Tensor<double>, double, int64_t, uint64_t);
template double grad_check_leaves<double>(
    const std::function<Tensor<double>()>&,
    const std::vector<std::pair<std::string, Tensor<double>*>>&, double, int64_t, uint64_t,
    std::vector<std::pair<std::string, double>>*);
template double grad_check_directional<double>(
    const std::function<Tensor<double>()>&,
    const std::vector<std::pair<std::string, Tensor<double>*>>&, double, int64_t, uint64_t,
    std::vector<std::pair<std::string, double>>*);

}  // namespace mvvt
