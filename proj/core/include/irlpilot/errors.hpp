#pragma once

#include <stdexcept>
#include <string>

namespace irlpilot {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NoStabilizingSolution : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

class SingularRHat : public Error {
 public:
  using Error::Error;
};

class SingularThrustDenominator : public Error {
 public:
  using Error::Error;
};

class SingularNormalMatrix : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace irlpilot
