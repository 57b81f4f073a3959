#pragma once

#include <stdexcept>
#include <string>

namespace mmner {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension or shape disagreement between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Numeric-domain violation (log of non-positive, non-finite softmax input).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Violated call contract (non-scalar loss, illegal tag sequence, bad index).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries the line number where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmner
