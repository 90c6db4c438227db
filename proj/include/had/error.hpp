#pragma once

#include <stdexcept>
#include <string>

namespace had {

/// Input violates a documented precondition or data invariant.
/// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine could not produce a reliable answer
/// (singular design, insufficient effective observations, ...).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace had
