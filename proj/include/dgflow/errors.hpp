// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgflow {

/// Bad shapes, invalid hyperparameters, unstable step sizes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An API was called in a way its contract forbids (e.g. multi-output net
/// passed where a scalar logit is required).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A configuration the implementation deliberately does not support.
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A function was evaluated outside its mathematical domain.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A non-finite value appeared during training or simulation.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::ptrdiff_t step = -1,
               std::ptrdiff_t index = -1)
      : std::runtime_error(what), step_(step), index_(index) {}

  /// Iteration or step at which the failure was detected, -1 if unknown.
  std::ptrdiff_t step() const noexcept { return step_; }
  /// Particle or row index, -1 if not applicable.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t step_;
  std::ptrdiff_t index_;
};

/// A verification check (oracle comparison, manifest hash) failed.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for all checkpoint loading failures.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file is not valid JSON or a required field is missing or mistyped.
class CheckpointParseError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// format_version is not one this build understands.
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Layer descriptions and weight arrays disagree on dimensions.
class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace dgflow
