#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scbf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on an argument (bad resolution, negative amplitude, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two objects that must share a basis or grid do not.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// A regime's parameter hypothesis does not hold; the message names the failing inequality.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Schema or regime problems in an experiment document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Runtime blow-up guard: non-finite state or energy above the abort threshold.
class GuardAbort : public Error {
 public:
  GuardAbort(const std::string& what, std::uint64_t trajectory, std::uint64_t step)
      : Error(what + " (trajectory " + std::to_string(trajectory) + ", step " + std::to_string(step) + ")"),
        trajectory_(trajectory),
        step_(step) {}

  std::uint64_t trajectory() const noexcept { return trajectory_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t trajectory_;
  std::uint64_t step_;
};

}  // namespace scbf
