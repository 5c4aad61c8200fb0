// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace llmconf {

// Base class for every domain error. The CLI maps these to exit status 1;
// anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON/YAML, unknown enum spelling, unknown field.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input parsed but violates an invariant (duplicate coordinate, latency <= 0, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// No grid stored for (kind, quant, fixed dims).
class MissingKeyError : public Error {
 public:
  using Error::Error;
};

// Query outside the grid box on a side whose policy is strict.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

// ModelSpec / ParallelConfig combination is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Serving-mode arithmetic has no valid assignment (e.g. no generation slots
// left in aggregated mode) or memory does not fit.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Unknown backend profile, database id, model id.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Request exceeds a configured size limit (search-space cap).
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace llmconf
