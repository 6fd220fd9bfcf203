// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mvvt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible tensor shapes or invalid axes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / dataset / serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required (loss, gradients).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A verification check exceeded its threshold.
class VerifyError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvvt
