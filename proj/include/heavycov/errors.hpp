#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace heavycov {

/// Caller passed a value outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed user input: unreadable file, bad CSV row, unknown config key.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative numerical routine failed to produce a trustworthy result.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The geometric-median solver ran out of iterations.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate,
                   double gap_bound)
      : NumericError(what, gap_bound), last_iterate_(std::move(last_iterate)) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double gap_bound() const noexcept { return residual(); }

 private:
  Eigen::VectorXd last_iterate_;
};

/// Too few observations for the requested confidence parameter.
class SampleSizeError : public std::runtime_error {
 public:
  SampleSizeError(const std::string& what, long minimum_m)
      : std::runtime_error(what), minimum_m_(minimum_m) {}

  long minimum_m() const noexcept { return minimum_m_; }

 private:
  long minimum_m_;
};

/// Two eigenvalues that must be separated are (numerically) tied.
class DegenerateSpectrumError : public std::runtime_error {
 public:
  DegenerateSpectrumError(const std::string& what, double upper, double lower)
      : std::runtime_error(what), upper_(upper), lower_(lower) {}

  double upper() const noexcept { return upper_; }
  double lower() const noexcept { return lower_; }

 private:
  double upper_;
  double lower_;
};

/// A benchmark configuration requests infeasible (m, beta) combinations.
class ConfigError : public std::runtime_error {
 public:
  using Pair = std::pair<long, double>;

  ConfigError(const std::string& what, std::vector<Pair> offending = {})
      : std::runtime_error(what), offending_(std::move(offending)) {}

  const std::vector<Pair>& offending() const noexcept { return offending_; }

 private:
  std::vector<Pair> offending_;
};

}  // namespace heavycov
