// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace nahr {

/// Base error for everything the library throws. Runtime failures (I/O,
/// corrupt inputs discovered mid-run) use this type directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value or call precondition is invalid. Raised before any
/// work is done; the CLI maps it to exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace nahr
