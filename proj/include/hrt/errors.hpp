#pragma once

#include <stdexcept>
#include <string>

namespace hrt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class CycleError : public Error {
 public:
  using Error::Error;
};

class MissingDuration : public Error {
 public:
  using Error::Error;
};

class GridOverflow : public Error {
 public:
  using Error::Error;
};

class InfeasiblePrecedence : public Error {
 public:
  using Error::Error;
};

class ExhaustedRetries : public Error {
 public:
  using Error::Error;
};

}  // namespace hrt
