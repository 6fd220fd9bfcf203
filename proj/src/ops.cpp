// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "kernels.hpp"

namespace mvvt {

namespace {

// Per-axis strides of b after aligning it to `out_shape` by prepending unit
// extents; broadcast axes get stride 0.
struct BroadcastPlan {
  Shape out_shape;
  std::vector<int64_t> bstrides;
  bool same_shape;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  if (b.size() > a.size()) {
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(b) + " to lower-rank " +
                     shape_str(a));
  }
  BroadcastPlan plan;
  plan.out_shape = a;
  plan.bstrides.assign(a.size(), 0);
  plan.same_shape = (a == b);
  const size_t pad = a.size() - b.size();
  // Row-major strides of b.
  std::vector<int64_t> bstride(b.size());
  int64_t s = 1;
  for (size_t i = b.size(); i-- > 0;) {
    bstride[i] = s;
    s *= b[i];
  }
  for (size_t i = 0; i < a.size(); ++i) {
    if (i < pad) continue;
    const int64_t be = b[i - pad];
    if (be == a[i]) {
      plan.bstrides[i] = bstride[i - pad];
    } else if (be == 1) {
      plan.bstrides[i] = 0;
    } else {
      throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible");
    }
  }
  return plan;
}

// Walks the output index space while tracking the matching linear index
// into the broadcast operand.
template <class Fn>
void for_each_broadcast(const BroadcastPlan& plan, int64_t numel, Fn&& fn) {
  const size_t rank = plan.out_shape.size();
  if (rank == 0) {
    fn(0, 0);
    return;
  }
  std::vector<int64_t> counter(rank, 0);
  int64_t ib = 0;
  for (int64_t i = 0; i < numel; ++i) {
    fn(i, ib);
    for (size_t ax = rank; ax-- > 0;) {
      ++counter[ax];
      ib += plan.bstrides[ax];
      if (counter[ax] < plan.out_shape[ax]) break;
      ib -= plan.bstrides[ax] * plan.out_shape[ax];
      counter[ax] = 0;
    }
  }
}

template <class T, class Combine>
Tensor<T> broadcast_binary(const Tensor<T>& a, const Tensor<T>& b, const char* name, Combine comb) {
  BroadcastPlan plan = plan_broadcast(a.shape(), b.shape(), name);
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  if (plan.same_shape) {
    for (int64_t i = 0; i < out.numel(); ++i) po[i] = comb(pa[i], pb[i]);
  } else {
    for_each_broadcast(plan, out.numel(), [&](int64_t i, int64_t ib) { po[i] = comb(pa[i], pb[ib]); });
  }
  return out;
}

// dout reduced onto b's shape (sum over broadcast extents).
template <class T>
std::vector<T> reduce_to_operand(const BroadcastPlan& plan, const std::vector<T>& dout, int64_t bnumel) {
  std::vector<T> db(static_cast<size_t>(bnumel), T(0));
  for_each_broadcast(plan, static_cast<int64_t>(dout.size()),
                     [&](int64_t i, int64_t ib) { db[static_cast<size_t>(ib)] += dout[static_cast<size_t>(i)]; });
  return db;
}

template <class T>
void check_axis(const Tensor<T>& x, int64_t axis, const char* op) {
  if (axis < 0 || axis >= x.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                     shape_str(x.shape()));
  }
}

}  // namespace

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  BroadcastPlan plan = plan_broadcast(a.shape(), b.shape(), "add");
  Tensor<T> out = broadcast_binary(a, b, "add", [](T x, T y) { return x + y; });
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(a, tape) || tracked(b, tape))) {
    bool na = tracked(a, tape), nb = tracked(b, tape);
    Tensor<T> ca = a, cb = b;
    out.node = tape->record(out.numel(), [=, plan = std::move(plan)](Tape<T>& t, const std::vector<T>& dout) mutable {
      if (na) propagate(t, ca, dout.data(), static_cast<int64_t>(dout.size()));
      if (nb) {
        if (plan.same_shape) {
          propagate(t, cb, dout.data(), static_cast<int64_t>(dout.size()));
        } else {
          std::vector<T> db = reduce_to_operand(plan, dout, cb.numel());
          propagate(t, cb, db.data(), cb.numel());
        }
      }
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  BroadcastPlan plan = plan_broadcast(a.shape(), b.shape(), "sub");
  Tensor<T> out = broadcast_binary(a, b, "sub", [](T x, T y) { return x - y; });
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(a, tape) || tracked(b, tape))) {
    bool na = tracked(a, tape), nb = tracked(b, tape);
    Tensor<T> ca = a, cb = b;
    out.node = tape->record(out.numel(), [=, plan = std::move(plan)](Tape<T>& t, const std::vector<T>& dout) mutable {
      if (na) propagate(t, ca, dout.data(), static_cast<int64_t>(dout.size()));
      if (nb) {
        std::vector<T> neg(dout.size());
        for (size_t i = 0; i < dout.size(); ++i) neg[i] = -dout[i];
        if (plan.same_shape) {
          propagate(t, cb, neg.data(), static_cast<int64_t>(neg.size()));
        } else {
          std::vector<T> db = reduce_to_operand(plan, neg, cb.numel());
          propagate(t, cb, db.data(), cb.numel());
        }
      }
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  BroadcastPlan plan = plan_broadcast(a.shape(), b.shape(), "mul");
  Tensor<T> out = broadcast_binary(a, b, "mul", [](T x, T y) { return x * y; });
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(a, tape) || tracked(b, tape))) {
    bool na = tracked(a, tape), nb = tracked(b, tape);
    Tensor<T> ca = a, cb = b;
    out.node = tape->record(out.numel(), [=, plan = std::move(plan)](Tape<T>& t, const std::vector<T>& dout) mutable {
      const T* pa = ca.data();
      const T* pb = cb.data();
      if (na) {
        std::vector<T> da(dout.size());
        if (plan.same_shape) {
          for (size_t i = 0; i < dout.size(); ++i) da[i] = dout[i] * pb[i];
        } else {
          for_each_broadcast(plan, static_cast<int64_t>(dout.size()),
                             [&](int64_t i, int64_t ib) { da[static_cast<size_t>(i)] = dout[static_cast<size_t>(i)] * pb[ib]; });
        }
        propagate(t, ca, da.data(), static_cast<int64_t>(da.size()));
      }
      if (nb) {
        std::vector<T> db(static_cast<size_t>(cb.numel()), T(0));
        if (plan.same_shape) {
          for (size_t i = 0; i < dout.size(); ++i) db[i] = dout[i] * pa[i];
        } else {
          for_each_broadcast(plan, static_cast<int64_t>(dout.size()), [&](int64_t i, int64_t ib) {
            db[static_cast<size_t>(ib)] += dout[static_cast<size_t>(i)] * pa[i];
          });
        }
        propagate(t, cb, db.data(), cb.numel());
      }
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  Tensor<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) po[i] = px[i] * c;
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx, c](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(dout.size());
      for (size_t i = 0; i < dout.size(); ++i) dx[i] = dout[i] * c;
      propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: operands must have rank >= 2, got " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const int64_t m = a.extent(a.rank() - 2);
  const int64_t k = a.extent(a.rank() - 1);
  const bool b_shared = (b.rank() == 2);
  if (!b_shared) {
    if (b.rank() != a.rank() ||
        !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin())) {
      throw ShapeError("matmul: leading extents of " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()) + " do not match");
    }
  }
  const int64_t bk = b.extent(b.rank() - 2);
  const int64_t n = b.extent(b.rank() - 1);
  if (bk != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(n);
  Tensor<T> out(out_shape);
  const int64_t batch = a.numel() / (m * k);
  for (int64_t bi = 0; bi < batch; ++bi) {
    kernels::gemm_nn(a.data() + bi * m * k, b.data() + (b_shared ? 0 : bi * k * n),
                     out.data() + bi * m * n, m, k, n, false);
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(a, tape) || tracked(b, tape))) {
    bool na = tracked(a, tape), nb = tracked(b, tape);
    Tensor<T> ca = a, cb = b;
    out.node = tape->record(out.numel(), [=](Tape<T>& t, const std::vector<T>& dout) mutable {
      if (na) {
        std::vector<T> da(static_cast<size_t>(ca.numel()));
        for (int64_t bi = 0; bi < batch; ++bi) {
          kernels::gemm_nt(dout.data() + bi * m * n, cb.data() + (b_shared ? 0 : bi * k * n),
                           da.data() + bi * m * k, m, n, k, false);
        }
        propagate(t, ca, da.data(), ca.numel());
      }
      if (nb) {
        std::vector<T> db(static_cast<size_t>(cb.numel()), T(0));
        for (int64_t bi = 0; bi < batch; ++bi) {
          kernels::gemm_tn(ca.data() + bi * m * k, dout.data() + bi * m * n,
                           db.data() + (b_shared ? 0 : bi * k * n), k, m, n, b_shared && bi > 0);
        }
        propagate(t, cb, db.data(), cb.numel());
      }
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("transpose_last2: rank must be >= 2, got " + shape_str(x.shape()));
  const int64_t m = x.extent(x.rank() - 2);
  const int64_t n = x.extent(x.rank() - 1);
  Shape out_shape = x.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  Tensor<T> out(out_shape);
  const int64_t batch = x.numel() / (m * n);
  for (int64_t bi = 0; bi < batch; ++bi) {
    kernels::transpose2d(x.data() + bi * m * n, out.data() + bi * m * n, m, n);
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx, m, n, batch](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(dout.size());
      for (int64_t bi = 0; bi < batch; ++bi) {
        kernels::transpose2d(dout.data() + bi * m * n, dx.data() + bi * m * n, n, m);
      }
      propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
  }
  Tensor<T> out(std::move(new_shape), x.values());
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx](Tape<T>& t, const std::vector<T>& dout) mutable {
      propagate(t, cx, dout.data(), static_cast<int64_t>(dout.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

namespace {

// outer/inner decomposition around one axis: x[o, i, j] with i along `axis`.
struct AxisSpan {
  int64_t outer, extent, inner;
};

template <class T>
AxisSpan axis_span(const Tensor<T>& x, int64_t axis) {
  AxisSpan s{1, x.extent(axis), 1};
  for (int64_t i = 0; i < axis; ++i) s.outer *= x.extent(i);
  for (int64_t i = axis + 1; i < x.rank(); ++i) s.inner *= x.extent(i);
  return s;
}

}  // namespace

template <class T>
Tensor<T> slice(const Tensor<T>& x, int64_t axis, int64_t start, int64_t len) {
  check_axis(x, axis, "slice");
  if (start < 0 || len <= 0 || start + len > x.extent(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") invalid for extent " + std::to_string(x.extent(axis)));
  }
  AxisSpan sp = axis_span(x, axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<size_t>(axis)] = len;
  Tensor<T> out(out_shape);
  const T* px = x.data();
  T* po = out.data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    const T* src = px + (o * sp.extent + start) * sp.inner;
    T* dst = po + o * len * sp.inner;
    std::memcpy(dst, src, sizeof(T) * static_cast<size_t>(len * sp.inner));
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx, sp, start, len](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(static_cast<size_t>(cx.numel()), T(0));
      for (int64_t o = 0; o < sp.outer; ++o) {
        const T* src = dout.data() + o * len * sp.inner;
        T* dst = dx.data() + (o * sp.extent + start) * sp.inner;
        std::memcpy(dst, src, sizeof(T) * static_cast<size_t>(len * sp.inner));
      }
      propagate(t, cx, dx.data(), cx.numel());
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int64_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  check_axis(parts[0], axis, "concat");
  Shape out_shape = parts[0].shape();
  int64_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != parts[0].rank()) throw ShapeError("concat: rank mismatch");
    for (int64_t i = 0; i < p.rank(); ++i) {
      if (i != axis && p.extent(i) != parts[0].extent(i)) {
        throw ShapeError("concat: extents differ off-axis: " + shape_str(p.shape()) + " vs " +
                         shape_str(parts[0].shape()));
      }
    }
    total += p.extent(axis);
  }
  out_shape[static_cast<size_t>(axis)] = total;
  Tensor<T> out(out_shape);
  AxisSpan osp = axis_span(out, axis);
  int64_t offset = 0;
  for (const auto& p : parts) {
    AxisSpan psp = axis_span(p, axis);
    const T* src = p.data();
    for (int64_t o = 0; o < psp.outer; ++o) {
      T* dst = out.data() + (o * osp.extent + offset) * osp.inner;
      std::memcpy(dst, src + o * psp.extent * psp.inner,
                  sizeof(T) * static_cast<size_t>(psp.extent * psp.inner));
    }
    offset += p.extent(axis);
  }
  Tape<T>* tape = Tape<T>::current();
  bool any = false;
  if (tape) {
    for (const auto& p : parts) any = any || tracked(p, tape);
  }
  if (tape && any) {
    std::vector<Tensor<T>> cp = parts;
    std::vector<char> need(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) need[i] = tracked(parts[i], tape) ? 1 : 0;
    out.node = tape->record(out.numel(), [cp, need, osp, axis](Tape<T>& t, const std::vector<T>& dout) mutable {
      int64_t off = 0;
      for (size_t pi = 0; pi < cp.size(); ++pi) {
        AxisSpan psp = axis_span(cp[pi], axis);
        if (need[pi]) {
          std::vector<T> dp(static_cast<size_t>(cp[pi].numel()));
          for (int64_t o = 0; o < psp.outer; ++o) {
            const T* src = dout.data() + (o * osp.extent + off) * osp.inner;
            std::memcpy(dp.data() + o * psp.extent * psp.inner, src,
                        sizeof(T) * static_cast<size_t>(psp.extent * psp.inner));
          }
          propagate(t, cp[pi], dp.data(), cp[pi].numel());
        }
        off += cp[pi].extent(axis);
      }
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> softmax(const Tensor<T>& x, int64_t axis) {
  check_axis(x, axis, "softmax");
  AxisSpan sp = axis_span(x, axis);
  Tensor<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t in = 0; in < sp.inner; ++in) {
      const int64_t base = o * sp.extent * sp.inner + in;
      T mx = px[base];
      for (int64_t i = 1; i < sp.extent; ++i) mx = std::max(mx, px[base + i * sp.inner]);
      T sum = T(0);
      for (int64_t i = 0; i < sp.extent; ++i) {
        const T e = std::exp(px[base + i * sp.inner] - mx);
        po[base + i * sp.inner] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (int64_t i = 0; i < sp.extent; ++i) po[base + i * sp.inner] *= inv;
    }
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    Tensor<T> saved = out;  // y is needed for the backward pass
    out.node = tape->record(out.numel(), [cx, saved, sp](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(dout.size());
      const T* y = saved.data();
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          const int64_t base = o * sp.extent * sp.inner + in;
          T dot = T(0);
          for (int64_t i = 0; i < sp.extent; ++i) {
            const int64_t idx = base + i * sp.inner;
            dot += dout[static_cast<size_t>(idx)] * y[idx];
          }
          for (int64_t i = 0; i < sp.extent; ++i) {
            const int64_t idx = base + i * sp.inner;
            dx[static_cast<size_t>(idx)] = y[idx] * (dout[static_cast<size_t>(idx)] - dot);
          }
        }
      }
      propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() < 1 || x.extent(x.rank() - 1) < 1) {
    throw ShapeError("layer_norm: last axis must be non-empty, got " + shape_str(x.shape()));
  }
  const int64_t n = x.extent(x.rank() - 1);
  if (gamma.numel() != n || beta.numel() != n) {
    throw ShapeError("layer_norm: gamma/beta must have extent " + std::to_string(n) + ", got " +
                     shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
  }
  if (eps <= T(0)) throw ConfigError("layer_norm: eps must be positive");
  const int64_t tokens = x.numel() / n;
  Tensor<T> out(x.shape());
  std::vector<T> xhat(static_cast<size_t>(x.numel()));
  std::vector<T> inv_std(static_cast<size_t>(tokens));
  const T* px = x.data();
  const T* pg = gamma.data();
  const T* pb = beta.data();
  T* po = out.data();
  for (int64_t tkn = 0; tkn < tokens; ++tkn) {
    const T* row = px + tkn * n;
    T mean = T(0);
    for (int64_t i = 0; i < n; ++i) mean += row[i];
    mean /= static_cast<T>(n);
    T var = T(0);
    for (int64_t i = 0; i < n; ++i) {
      const T d = row[i] - mean;
      var += d * d;
    }
    var /= static_cast<T>(n);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(tkn)] = inv;
    for (int64_t i = 0; i < n; ++i) {
      const T h = (row[i] - mean) * inv;
      xhat[static_cast<size_t>(tkn * n + i)] = h;
      po[tkn * n + i] = pg[i] * h + pb[i];
    }
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(x, tape) || tracked(gamma, tape) || tracked(beta, tape))) {
    bool nx = tracked(x, tape), ng = tracked(gamma, tape), nb = tracked(beta, tape);
    Tensor<T> cx = x, cg = gamma, cb = beta;
    out.node = tape->record(
        out.numel(),
        [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, const std::vector<T>& dout) mutable {
          const T* g = cg.data();
          if (ng) {
            std::vector<T> dg(static_cast<size_t>(n), T(0));
            for (int64_t tkn = 0; tkn < tokens; ++tkn)
              for (int64_t i = 0; i < n; ++i)
                dg[static_cast<size_t>(i)] += dout[static_cast<size_t>(tkn * n + i)] * xhat[static_cast<size_t>(tkn * n + i)];
            propagate(t, cg, dg.data(), n);
          }
          if (nb) {
            std::vector<T> db(static_cast<size_t>(n), T(0));
            for (int64_t tkn = 0; tkn < tokens; ++tkn)
              for (int64_t i = 0; i < n; ++i) db[static_cast<size_t>(i)] += dout[static_cast<size_t>(tkn * n + i)];
            propagate(t, cb, db.data(), n);
          }
          if (nx) {
            std::vector<T> dx(dout.size());
            for (int64_t tkn = 0; tkn < tokens; ++tkn) {
              T sum_dh = T(0), sum_dh_h = T(0);
              for (int64_t i = 0; i < n; ++i) {
                const size_t idx = static_cast<size_t>(tkn * n + i);
                const T dh = dout[idx] * g[i];
                sum_dh += dh;
                sum_dh_h += dh * xhat[idx];
              }
              const T inv = inv_std[static_cast<size_t>(tkn)];
              const T inv_n = T(1) / static_cast<T>(n);
              for (int64_t i = 0; i < n; ++i) {
                const size_t idx = static_cast<size_t>(tkn * n + i);
                const T dh = dout[idx] * g[i];
                dx[idx] = inv * (dh - inv_n * sum_dh - xhat[idx] * inv_n * sum_dh_h);
              }
            }
            propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
          }
        });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(dout.size());
      const T* px = cx.data();
      for (size_t i = 0; i < dout.size(); ++i) dx[i] = px[i] > T(0) ? dout[i] : T(0);
      propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

namespace {
// tanh-form gelu constants
constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;
}  // namespace

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T v = px[i];
    const T u = static_cast<T>(kGeluC0) * (v + static_cast<T>(kGeluC1) * v * v * v);
    po[i] = T(0.5) * v * (T(1) + std::tanh(u));
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(dout.size());
      const T* px = cx.data();
      for (size_t i = 0; i < dout.size(); ++i) {
        const T v = px[i];
        const T u = static_cast<T>(kGeluC0) * (v + static_cast<T>(kGeluC1) * v * v * v);
        const T th = std::tanh(u);
        const T du = static_cast<T>(kGeluC0) * (T(1) + T(3) * static_cast<T>(kGeluC1) * v * v);
        dx[i] = dout[i] * (T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * du);
      }
      propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    // Identity; still pass gradients through a node so downstream graph
    // structure is the same in both modes.
    Tensor<T> out(x.shape(), x.values());
    Tape<T>* tape = Tape<T>::current();
    if (tape && tracked(x, tape)) {
      Tensor<T> cx = x;
      out.node = tape->record(out.numel(), [cx](Tape<T>& t, const std::vector<T>& dout) mutable {
        propagate(t, cx, dout.data(), static_cast<int64_t>(dout.size()));
      });
      out.tape_generation = tape->generation();
    }
    return out;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out(x.shape());
  std::vector<uint8_t> mask(static_cast<size_t>(x.numel()));
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const bool keep = rng.next_uniform() >= rate;
    mask[static_cast<size_t>(i)] = keep;
    po[i] = keep ? px[i] * keep_scale : T(0);
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(),
                            [cx, mask = std::move(mask), keep_scale](Tape<T>& t, const std::vector<T>& dout) mutable {
                              std::vector<T> dx(dout.size());
                              for (size_t i = 0; i < dout.size(); ++i)
                                dx[i] = mask[i] ? dout[i] * keep_scale : T(0);
                              propagate(t, cx, dx.data(), static_cast<int64_t>(dx.size()));
                            });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> mean(const Tensor<T>& x, int64_t axis) {
  check_axis(x, axis, "mean");
  AxisSpan sp = axis_span(x, axis);
  Shape out_shape;
  for (int64_t i = 0; i < x.rank(); ++i)
    if (i != axis) out_shape.push_back(x.extent(i));
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor<T> out(out_shape);
  const T inv = T(1) / static_cast<T>(sp.extent);
  const T* px = x.data();
  T* po = out.data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t in = 0; in < sp.inner; ++in) {
      T sum = T(0);
      for (int64_t i = 0; i < sp.extent; ++i) sum += px[(o * sp.extent + i) * sp.inner + in];
      po[o * sp.inner + in] = sum * inv;
    }
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(out.numel(), [cx, sp, inv](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(static_cast<size_t>(cx.numel()));
      for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t i = 0; i < sp.extent; ++i)
          for (int64_t in = 0; in < sp.inner; ++in)
            dx[static_cast<size_t>((o * sp.extent + i) * sp.inner + in)] =
                dout[static_cast<size_t>(o * sp.inner + in)] * inv;
      propagate(t, cx, dx.data(), cx.numel());
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
  Tensor<T> out({1});
  const T inv = T(1) / static_cast<T>(x.numel());
  const T* px = x.data();
  T sum = T(0);
  for (int64_t i = 0; i < x.numel(); ++i) sum += px[i];
  out.data()[0] = sum * inv;
  Tape<T>* tape = Tape<T>::current();
  if (tape && tracked(x, tape)) {
    Tensor<T> cx = x;
    out.node = tape->record(1, [cx, inv](Tape<T>& t, const std::vector<T>& dout) mutable {
      std::vector<T> dx(static_cast<size_t>(cx.numel()), dout[0] * inv);
      propagate(t, cx, dx.data(), cx.numel());
    });
    out.tape_generation = tape->generation();
  }
  return out;
}

namespace {

// Flattens each non-overlapping PxP patch of x (B,C,H,W) into a row of
// length C*P*P; rows ordered batch-major, then patch row-major.
template <class T>
std::vector<T> im2row(const T* x, int64_t b, int64_t c, int64_t h, int64_t w, int64_t p) {
  const int64_t ph = h / p, pw = w / p;
  const int64_t row_len = c * p * p;
  std::vector<T> rows(static_cast<size_t>(b * ph * pw * row_len));
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t py = 0; py < ph; ++py) {
      for (int64_t px_ = 0; px_ < pw; ++px_) {
        T* row = rows.data() + ((bi * ph + py) * pw + px_) * row_len;
        for (int64_t ci = 0; ci < c; ++ci) {
          const T* img = x + (bi * c + ci) * h * w;
          for (int64_t dy = 0; dy < p; ++dy) {
            const T* src = img + (py * p + dy) * w + px_ * p;
            T* dst = row + (ci * p + dy) * p;
            std::memcpy(dst, src, sizeof(T) * static_cast<size_t>(p));
          }
        }
      }
    }
  }
  return rows;
}

// Inverse placement of im2row (patches do not overlap).
template <class T>
void row2im(const T* rows, T* x, int64_t b, int64_t c, int64_t h, int64_t w, int64_t p) {
  const int64_t ph = h / p, pw = w / p;
  const int64_t row_len = c * p * p;
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t py = 0; py < ph; ++py) {
      for (int64_t px_ = 0; px_ < pw; ++px_) {
        const T* row = rows + ((bi * ph + py) * pw + px_) * row_len;
        for (int64_t ci = 0; ci < c; ++ci) {
          T* img = x + (bi * c + ci) * h * w;
          for (int64_t dy = 0; dy < p; ++dy) {
            T* dst = img + (py * p + dy) * w + px_ * p;
            const T* src = row + (ci * p + dy) * p;
            std::memcpy(dst, src, sizeof(T) * static_cast<size_t>(p));
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Tensor<T> patchify_project(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           int64_t patch) {
  if (x.rank() != 4) throw ShapeError("patchify_project: input must be (B,C,H,W), got " + shape_str(x.shape()));
  const int64_t b = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  if (patch <= 0 || h % patch != 0 || w % patch != 0) {
    throw ShapeError("patchify_project: H=" + std::to_string(h) + ", W=" + std::to_string(w) +
                     " must be divisible by P=" + std::to_string(patch));
  }
  const int64_t row_len = c * patch * patch;
  if (weight.rank() != 2 || weight.extent(0) != row_len) {
    throw ShapeError("patchify_project: weight must be (" + std::to_string(row_len) + ", D), got " +
                     shape_str(weight.shape()));
  }
  const int64_t d = weight.extent(1);
  if (bias.numel() != d) {
    throw ShapeError("patchify_project: bias must have extent " + std::to_string(d) + ", got " +
                     shape_str(bias.shape()));
  }
  const int64_t p_num = (h / patch) * (w / patch);
  std::vector<T> rows = im2row(x.data(), b, c, h, w, patch);
  Tensor<T> out({b, p_num, d});
  kernels::gemm_nn(rows.data(), weight.data(), out.data(), b * p_num, row_len, d, false);
  {
    T* po = out.data();
    const T* pb = bias.data();
    for (int64_t r = 0; r < b * p_num; ++r)
      for (int64_t j = 0; j < d; ++j) po[r * d + j] += pb[j];
  }
  Tape<T>* tape = Tape<T>::current();
  if (tape && (tracked(x, tape) || tracked(weight, tape) || tracked(bias, tape))) {
    bool nx = tracked(x, tape), nw = tracked(weight, tape), nb = tracked(bias, tape);
    Tensor<T> cx = x, cw = weight, cb = bias;
    out.node = tape->record(
        out.numel(), [=, rows = std::move(rows)](Tape<T>& t, const std::vector<T>& dout) mutable {
          const int64_t nrows = b * p_num;
          if (nw) {
            std::vector<T> dw(static_cast<size_t>(row_len * d));
            kernels::gemm_tn(rows.data(), dout.data(), dw.data(), row_len, nrows, d, false);
            propagate(t, cw, dw.data(), row_len * d);
          }
          if (nb) {
            std::vector<T> db(static_cast<size_t>(d), T(0));
            for (int64_t r = 0; r < nrows; ++r)
              for (int64_t j = 0; j < d; ++j) db[static_cast<size_t>(j)] += dout[static_cast<size_t>(r * d + j)];
            propagate(t, cb, db.data(), d);
          }
          if (nx) {
            std::vector<T> drows(static_cast<size_t>(nrows * row_len));
            kernels::gemm_nt(dout.data(), cw.data(), drows.data(), nrows, d, row_len, false);
            std::vector<T> dx(static_cast<size_t>(cx.numel()));
            row2im(drows.data(), dx.data(), b, c, h, w, patch);
            propagate(t, cx, dx.data(), cx.numel());
          }
        });
    out.tape_generation = tape->generation();
  }
  return out;
}

template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse_loss: shapes differ, " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
  }
  Tensor<T> d = sub(pred, target);
  return mean_all(mul(d, d));
}

#define MVVT_DEF_OPS(T)                                                                  \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                     \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> transpose_last2<T>(const Tensor<T>&);                              \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                               \
  template Tensor<T> slice<T>(const Tensor<T>&, int64_t, int64_t, int64_t);             \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int64_t);                 \
  template Tensor<T> softmax<T>(const Tensor<T>&, int64_t);                             \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> relu<T>(const Tensor<T>&);                                         \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                         \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, RngStream&);            \
  template Tensor<T> mean<T>(const Tensor<T>&, int64_t);                                \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                                     \
  template Tensor<T> patchify_project<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                         int64_t);                                      \
  template Tensor<T> mse_loss<T>(const Tensor<T>&, const Tensor<T>&);

MVVT_DEF_OPS(float)
MVVT_DEF_OPS(double)
#undef MVVT_DEF_OPS

}  // namespace mvvt
