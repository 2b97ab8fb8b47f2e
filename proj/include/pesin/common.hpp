#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pesin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
  Config,
  Domain,
  OrbitDivergence,
  SingularCocycle,
  GapViolation,
  ChartDomain,
  StepFailure,
  Precondition,
  Transversality,
  NonUniqueness,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an orbit leaves the finite range; carries the last good index.
class OrbitDivergence : public Error {
 public:
  OrbitDivergence(std::size_t last_finite, const std::string& what)
      : Error(ErrorKind::OrbitDivergence, what), last_finite_(last_finite) {}
  std::size_t last_finite_index() const noexcept { return last_finite_; }

 private:
  std::size_t last_finite_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline constexpr double kOverflowGuard = 1e12;
inline constexpr double kLogFloor = -50.0;

}  // namespace pesin
