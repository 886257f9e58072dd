// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vawm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible array extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range hyperparameter or argument value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a numeric operation.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset, checkpoint or log content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The expert driver cannot produce a plan (e.g. ego left the corridor).
class PolicyError : public Error {
 public:
  using Error::Error;
};

}  // namespace vawm
