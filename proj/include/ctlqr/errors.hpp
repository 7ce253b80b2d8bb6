#pragma once

#include <stdexcept>
#include <string>

namespace ctlqr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong shape, non-finite entries, or a violated precondition on inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be Hurwitz is not.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// A linear system could not be solved reliably.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// No stabilizing Riccati solution exists for the pair (A, B).
class StabilizabilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The regression Gram matrix is singular and no ridge was requested.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, double lambda_min)
      : Error(what + " (lambda_min " + std::to_string(lambda_min) + ")"),
        lambda_min_(lambda_min) {}
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  double lambda_min_;
};

/// The simulated state left the blow-up ball.
class BlowUpError : public Error {
 public:
  BlowUpError(double time, double norm)
      : Error("state blow-up at t=" + std::to_string(time) +
              " (|x|=" + std::to_string(norm) + ")"),
        time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Two trajectories do not share the same time grid.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, const std::string& path)
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ctlqr
