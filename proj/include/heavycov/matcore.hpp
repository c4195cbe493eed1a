#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace heavycov {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observations, one per row (m x d).
using Samples = Eigen::MatrixXd;

/// Dense symmetric matrix of doubles.
///
/// Construction symmetrizes the input as (A + A^T) / 2 and rejects inputs
/// whose asymmetry exceeds 1e-8 * max|entry| or which contain non-finite
/// values. Instances are immutable.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Matrix& a);

  static SymMat zero(Eigen::Index d);
  static SymMat identity(Eigen::Index d);
  static SymMat diagonal(const Vector& diag);
  /// z z^T
  static SymMat outer(const Vector& z);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double s) const;

 private:
  struct Trusted {};
  SymMat(Matrix a, Trusted) : m_(std::move(a)) {}
  friend SymMat symmetric_unchecked(Matrix a);

  Matrix m_;
};

/// Wraps a matrix the caller has already made exactly symmetric (e.g. a
/// U diag U^T product that was explicitly symmetrized). Skips validation.
SymMat symmetric_unchecked(Matrix a);

/// Eigendecomposition of a symmetric matrix: values sorted descending,
/// vectors stored as matching columns.
struct EigenDecomp {
  Vector values;
  Matrix vectors;

  Matrix reconstruct() const;
};

/// Clamp to [-1, 1]. Throws InvalidArgument on non-finite input.
double psi(double x);

EigenDecomp sym_eigen(const SymMat& a);

/// U f(Lambda) U^T.
SymMat matrix_function(const std::function<double(double)>& f, const SymMat& a);
SymMat matrix_function(const std::function<double(double)>& f, const EigenDecomp& e);

double op_norm(const SymMat& a);
double fro_norm(const SymMat& a);
double nuclear_norm(const SymMat& a);
double trace(const SymMat& a);

/// tr(A) / ||A|| for positive semi-definite, nonzero A.
double effective_rank(const SymMat& a);

}  // namespace heavycov
