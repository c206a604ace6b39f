// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tadvit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or model dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range argument or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint stage tag does not permit the requested operation.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace tadvit
