#pragma once

#include <stdexcept>
#include <string>

namespace srqfi {

/// Base class for all srqfi runtime failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DomainTooSmall : public Error {
 public:
  using Error::Error;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

class DegenerateSource : public Error {
 public:
  using Error::Error;
};

class InvalidCoherence : public Error {
 public:
  using Error::Error;
};

class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

class UnsupportedDerivative : public Error {
 public:
  using Error::Error;
};

class ApertureNotGaussian : public Error {
 public:
  using Error::Error;
};

class TailTooHeavy : public Error {
 public:
  using Error::Error;
};

class UnnormalizedPSF : public Error {
 public:
  using Error::Error;
};

class ParsevalMismatch : public Error {
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

}  // namespace srqfi
