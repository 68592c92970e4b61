#pragma once

#include <stdexcept>
#include <string>

namespace hjb {

// Invalid input: bad grid shape, malformed config, violated precondition.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The computation itself broke down: CFL violation, non-convergent policy
// iteration, singular frozen-policy system, non-finite values.  Exit code 1.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace hjb
