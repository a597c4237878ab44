#ifndef STBA_ERRORS_HPP_
#define STBA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace stba {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (BAL files, manifests).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a problem invariant.
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

/// |P_z| below the projection threshold.
class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

/// A damped 3x3 point block could not be factorized.
class SingularPointBlock : public Error {
 public:
  using Error::Error;
};

/// A damped 3x3 virtual point block could not be factorized.
class SingularVirtualBlock : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// PCG hit its iteration cap before reaching the requested tolerance.
class PcgStalled : public Error {
 public:
  using Error::Error;
};

/// A synthetic problem specification cannot yield a valid problem.
class InfeasibleSpec : public Error {
 public:
  using Error::Error;
};

}  // namespace stba

#endif  // STBA_ERRORS_HPP_
