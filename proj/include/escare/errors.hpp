#pragma once

#include <stdexcept>
#include <string>

namespace escare {

/// Estimation or linear-algebra failures (no feasible start, singular design,
/// covariance repair exhausted). Everything else thrown by the library is an
/// input/validation problem.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace escare
