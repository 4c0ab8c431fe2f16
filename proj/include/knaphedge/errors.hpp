#pragma once

#include <stdexcept>
#include <string>

namespace knaphedge {

// Error hierarchy. The CLI maps each category onto a distinct exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong dimensions, negative probabilities, bad budget.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Market model problems: arbitrage, incompleteness, malformed trees.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ArbitrageError : public ModelError {
 public:
  using ModelError::ModelError;
};

class IncompleteMarketError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Claim with zero perfect-hedge price (or zero real-world mean) where a
// normalized measure is needed.
class DegenerateClaimError : public Error {
 public:
  using Error::Error;
};

}  // namespace knaphedge
