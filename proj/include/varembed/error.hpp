// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace varembed {

// Base of every error raised by the library. The CLI reports what() as a
// one-line diagnostic and exits nonzero.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input: bad files, empty corpora, bad ids.
class InputError : public Error {
 public:
  using Error::Error;
};

// Incompatible tensor or table dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/inf encountered during training, or a statistic that is undefined
// for the given data (e.g. zero rank variance).
class NumericError : public Error {
 public:
  using Error::Error;
};

// A request the given inputs cannot serve, such as imputing with a fixed table.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace varembed
