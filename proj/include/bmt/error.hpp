#pragma once

#include <stdexcept>
#include <string>

namespace bmt {

// Bad parameters or malformed input data.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A type invariant does not hold for some input. `rule` names the broken
// invariant ("measure normalization", "height monotonicity", ...).
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string rule, const std::string &detail)
      : std::runtime_error(rule + ": " + detail), rule_(std::move(rule)) {}
  const std::string &rule() const noexcept { return rule_; }

private:
  std::string rule_;
};

// An iterative solver hit its iteration cap before meeting its tolerance.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace bmt
