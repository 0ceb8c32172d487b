#pragma once

#include <stdexcept>
#include <string>

namespace pml {

// Exit codes reported by the command-line tool for each error family.
enum class ExitCode : int { Ok = 0, Config = 2, Data = 3, Numeric = 4 };

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_message(const char* what, long expected, long actual) {
  return std::string(what) + ": expected width " + std::to_string(expected) + ", got " +
         std::to_string(actual);
}

}  // namespace pml
