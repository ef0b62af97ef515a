#pragma once

#include <stdexcept>
#include <string>

namespace alsrec {

// Malformed input bytes: CSV records, model files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A kernel produced or encountered a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix/vector dimensions disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or argument value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The evaluation protocol cannot run on the given dataset.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alsrec
