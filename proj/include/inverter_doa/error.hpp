#pragma once

#include <stdexcept>
#include <string>

namespace idoa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter set violates a documented invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedCombination : public Error {
 public:
  using Error::Error;
};

class DegenerateFault : public Error {
 public:
  using Error::Error;
};

/// Numerical solver failure (step-size underflow, non-finite state, ...).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// No closed cycle around the SEP could be assembled from the traced manifolds.
class OpenBasin : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

}  // namespace idoa
