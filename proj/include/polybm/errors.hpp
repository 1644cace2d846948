#pragma once

#include <stdexcept>
#include <string>

namespace polybm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent complex description.
class ComplexError : public Error {
 public:
  using Error::Error;
};

/// Geometric query outside the supported domain.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A trajectory reached the codimension-2 skeleton.
class CodimensionTwoHit : public GeometryError {
 public:
  CodimensionTwoHit() : GeometryError("codimension-2 hit") {}
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class OperatorError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace polybm
