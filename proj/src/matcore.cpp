#include "heavycov/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "heavycov/errors.hpp"

namespace heavycov {

namespace {

constexpr double kAsymmetryTol = 1e-8;
constexpr double kEigenResidualTol = 1e-9;
constexpr double kPsdTol = 1e-10;

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

SymMat::SymMat(const Matrix& a) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << "SymMat: matrix must be square, got " << a.rows() << "x" << a.cols();
    throw InvalidArgument(os.str());
  }
  if (!a.allFinite()) throw InvalidArgument("SymMat: entries must be finite");
  const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTol * scale) {
    std::ostringstream os;
    os << "SymMat: asymmetry " << asym << " exceeds tolerance " << kAsymmetryTol * scale;
    throw InvalidArgument(os.str());
  }
  m_ = symmetrized(a);
}

SymMat SymMat::zero(Eigen::Index d) { return SymMat(Matrix::Zero(d, d), Trusted{}); }

SymMat SymMat::identity(Eigen::Index d) { return SymMat(Matrix::Identity(d, d), Trusted{}); }

SymMat SymMat::diagonal(const Vector& diag) { return SymMat(Matrix(diag.asDiagonal())); }

SymMat SymMat::outer(const Vector& z) {
  if (!z.allFinite()) throw InvalidArgument("SymMat::outer: entries must be finite");
  return SymMat(z * z.transpose(), Trusted{});
}

SymMat SymMat::operator+(const SymMat& o) const {
  if (dim() != o.dim()) throw InvalidArgument("SymMat: dimension mismatch in +");
  return SymMat(m_ + o.m_, Trusted{});
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (dim() != o.dim()) throw InvalidArgument("SymMat: dimension mismatch in -");
  return SymMat(m_ - o.m_, Trusted{});
}

SymMat SymMat::operator*(double s) const {
  if (!std::isfinite(s)) throw InvalidArgument("SymMat: non-finite scale factor");
  return SymMat(m_ * s, Trusted{});
}

SymMat symmetric_unchecked(Matrix a) { return SymMat(std::move(a), SymMat::Trusted{}); }

Matrix EigenDecomp::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

double psi(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("psi: input must be finite");
  return std::clamp(x, -1.0, 1.0);
}

EigenDecomp sym_eigen(const SymMat& a) {
  const Eigen::Index d = a.dim();
  if (d == 0) return {Vector(0), Matrix(0, 0)};

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  const double scale = a.matrix().norm();
  if (solver.info() != Eigen::Success) {
    throw NumericError("sym_eigen: eigensolver did not converge", scale);
  }

  const Vector& asc = solver.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return asc(i) > asc(j); });

  EigenDecomp out{Vector(d), Matrix(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    out.values(k) = asc(order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }

  const double residual =
      (a.matrix() * out.vectors - out.vectors * out.values.asDiagonal()).norm();
  if (residual > kEigenResidualTol * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "sym_eigen: residual " << residual << " exceeds tolerance";
    throw NumericError(os.str(), residual);
  }
  return out;
}

SymMat matrix_function(const std::function<double(double)>& f, const EigenDecomp& e) {
  Vector fv = e.values.unaryExpr([&](double x) { return f(x); });
  const Matrix r = e.vectors * fv.asDiagonal() * e.vectors.transpose();
  return SymMat(symmetrized(r));
}

SymMat matrix_function(const std::function<double(double)>& f, const SymMat& a) {
  return matrix_function(f, sym_eigen(a));
}

double op_norm(const SymMat& a) {
  if (a.dim() == 0) return 0.0;
  return sym_eigen(a).values.cwiseAbs().maxCoeff();
}

double fro_norm(const SymMat& a) { return a.matrix().norm(); }

double nuclear_norm(const SymMat& a) { return sym_eigen(a).values.cwiseAbs().sum(); }

double trace(const SymMat& a) { return a.matrix().trace(); }

double effective_rank(const SymMat& a) {
  const EigenDecomp e = sym_eigen(a);
  if (a.dim() == 0) throw InvalidArgument("effective_rank: empty matrix");
  const double norm = e.values.cwiseAbs().maxCoeff();
  if (norm == 0.0) throw InvalidArgument("effective_rank: zero matrix");
  const double lmin = e.values(a.dim() - 1);
  if (lmin < -kPsdTol * norm) {
    std::ostringstream os;
    os << "effective_rank: matrix is indefinite (min eigenvalue " << lmin << ")";
    throw InvalidArgument(os.str());
  }
  return trace(a) / norm;
}

}  // namespace heavycov
