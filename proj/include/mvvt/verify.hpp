// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Numerical verification suite: finite-difference checks for every
// differentiable op, a naive-attention oracle comparison, and a
// finite-difference sweep of the full model loss at desk scale. All checks
// run in double precision.

#include <string>
#include <vector>

#include "mvvt/model.hpp"

namespace mvvt {

struct VerifyCheck {
  std::string name;
  double error = 0.0;      // max relative error (fd checks) or max abs diff (oracle)
  double threshold = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = false;
  double seconds = 0.0;

  std::string render() const;
  /// Name of the first failing check, or empty.
  std::string first_failure() const;
};

struct VerifyOptions {
  uint64_t seed = 20260809;
  /// Test fixture: name of an op whose backward pass is deliberately
  /// corrupted before comparison ("matmul"), to exercise the failure path.
  std::string inject_fault;
};

/// Independently coded quadratic-time multi-head attention, plain loops over
/// raw buffers. Used as the oracle the graph-based msa is compared against.
std::vector<double> naive_msa_oracle(const std::vector<double>& tokens, int64_t batch, int64_t t,
                                     int64_t width, int64_t heads, const LayerParams<double>& lp);

VerifyReport run_verify_suite(const VerifyOptions& opts = {});

}  // namespace mvvt
