#pragma once

#include <stdexcept>
#include <string>

namespace c2sw {

// Invalid input, shape or configuration. The CLI maps it to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value showed up during training or evaluation (exit status 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace c2sw
