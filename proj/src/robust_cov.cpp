#include "heavycov/robust_cov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "heavycov/errors.hpp"

namespace heavycov {

namespace {

constexpr double kGapTol = 1e-10;
constexpr double kTraceTol = 1e-8;

SymMat gram(const Matrix& residuals, const Vector& weights, double scale) {
  const Matrix weighted = residuals.array().colwise() * weights.array();
  const Matrix g = (residuals.transpose() * weighted) * scale;
  return SymMat(0.5 * (g + g.transpose()));
}

void check_samples(const Samples& samples, const Vector& mu, const char* who) {
  if (samples.rows() < 1) {
    throw InvalidArgument(std::string(who) + ": need at least one sample");
  }
  if (samples.cols() != mu.size()) {
    std::ostringstream os;
    os << who << ": samples have " << samples.cols() << " columns but centre has "
       << mu.size() << " entries";
    throw InvalidArgument(os.str());
  }
  if (!samples.allFinite() || !mu.allFinite()) {
    throw InvalidArgument(std::string(who) + ": inputs must be finite");
  }
}

}  // namespace

SymMat sample_covariance_about(const Samples& samples, const Vector& mu) {
  check_samples(samples, mu, "sample_covariance_about");
  const Matrix r = samples.rowwise() - mu.transpose();
  return gram(r, Vector::Ones(r.rows()), 1.0 / static_cast<double>(r.rows()));
}

SymMat sample_covariance(const Samples& samples) {
  if (samples.rows() < 1) throw InvalidArgument("sample_covariance: need at least one sample");
  return sample_covariance_about(samples, samples.colwise().mean().transpose());
}

SymMat truncated_cov(const Samples& samples, const Vector& mu_hat, double theta) {
  check_samples(samples, mu_hat, "truncated_cov");
  if (!std::isfinite(theta) || theta <= 0.0) {
    throw InvalidArgument("truncated_cov: theta must be finite and positive");
  }
  const Matrix r = samples.rowwise() - mu_hat.transpose();
  Vector w(r.rows());
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    const double scaled = theta * r.row(i).squaredNorm();
    // psi(scaled) / scaled, with the zero-residual limit handled explicitly.
    w(i) = scaled <= 1.0 ? (scaled == 0.0 ? 0.0 : 1.0) : 1.0 / scaled;
  }
  return gram(r, w, 1.0 / static_cast<double>(r.rows()));
}

double theta_for_sigma(double sigma, double beta, long m) {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw InvalidArgument("theta_for_sigma: sigma must be finite and positive");
  }
  if (m < 1) throw InvalidArgument("theta_for_sigma: m must be positive");
  return std::sqrt(beta / static_cast<double>(m)) / sigma;
}

FixedSigmaEstimate estimate_fixed_sigma(const Samples& samples, double sigma, double beta) {
  const long m = static_cast<long>(samples.rows());
  const double theta = theta_for_sigma(sigma, beta, std::max(m, 1L));
  MoMResult mean = median_of_means(samples, beta);
  SymMat est = truncated_cov(samples, mean.mu_hat, theta);
  return {std::move(est), std::move(mean), theta};
}

void LepskiConfig::validate() const {
  if (!std::isfinite(sigma_min) || !std::isfinite(sigma_max) || sigma_min <= 0.0) {
    throw InvalidArgument("LepskiConfig: sigma bounds must be finite and positive");
  }
  if (sigma_min > sigma_max) {
    throw InvalidArgument("LepskiConfig: sigma_min must not exceed sigma_max");
  }
  if (!std::isfinite(beta) || beta <= 1.0) {
    throw InvalidArgument("LepskiConfig: beta must be finite and > 1");
  }
}

std::vector<double> lepski_grid(double sigma_min, double sigma_max) {
  LepskiConfig{sigma_min, sigma_max, 2.0}.validate();
  std::vector<double> grid;
  for (double s = sigma_min; s < 2.0 * sigma_max; s *= 2.0) grid.push_back(s);
  return grid;
}

std::size_t lepski_select(const std::vector<std::vector<double>>& distances,
                          const std::vector<double>& sigmas, double beta, long m) {
  const std::size_t n = sigmas.size();
  if (n == 0) throw InvalidArgument("lepski_select: empty grid");
  if (distances.size() != n) throw InvalidArgument("lepski_select: distance table size mismatch");
  const double rate = std::sqrt(beta / static_cast<double>(m));
  for (std::size_t j = 0; j < n; ++j) {
    bool ok = true;
    for (std::size_t k = j + 1; k < n && ok; ++k) {
      ok = distances[j][k] <= 6.0 * sigmas[k] * rate;
    }
    if (ok) return j;
  }
  return n - 1;
}

LepskiReport lepski_estimate(const Samples& samples, const LepskiConfig& config) {
  config.validate();
  const long m = static_cast<long>(samples.rows());

  LepskiReport rep;
  rep.mean = median_of_means(samples, config.beta);
  rep.sigmas = lepski_grid(config.sigma_min, config.sigma_max);
  const std::size_t n = rep.sigmas.size();
  rep.thetas.reserve(n);
  rep.estimates.reserve(n);
  for (double s : rep.sigmas) {
    const double theta = theta_for_sigma(s, config.beta, m);
    rep.thetas.push_back(theta);
    rep.estimates.push_back(truncated_cov(samples, rep.mean.mu_hat, theta));
  }

  rep.distances.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      rep.distances[j][k] = op_norm(rep.estimates[k] - rep.estimates[j]);
    }
  }
  rep.j_star = lepski_select(rep.distances, rep.sigmas, config.beta, m);
  rep.sigma_star = rep.estimates[rep.j_star];
  return rep;
}

SymMat soft_threshold(const SymMat& sigma, double tau) {
  if (!std::isfinite(tau) || tau < 0.0) {
    throw InvalidArgument("soft_threshold: tau must be finite and nonnegative");
  }
  const double half = 0.5 * tau;
  return matrix_function([half](double l) { return std::max(l - half, 0.0); }, sym_eigen(sigma));
}

PcaResult pca(const SymMat& sigma, int k) {
  const Eigen::Index d = sigma.dim();
  if (k < 1 || k > d) {
    std::ostringstream os;
    os << "pca: k must lie in [1, " << d << "], got " << k;
    throw InvalidArgument(os.str());
  }
  const EigenDecomp e = sym_eigen(sigma);
  double gap = 0.0;
  if (k < d) {
    gap = e.values(k - 1) - e.values(k);
    const double scale = e.values.cwiseAbs().maxCoeff();
    if (!(gap > kGapTol * scale)) {
      std::ostringstream os;
      os << "pca: eigenvalues " << e.values(k - 1) << " and " << e.values(k)
         << " are tied at positions " << k << " and " << k + 1;
      throw DegenerateSpectrumError(os.str(), e.values(k - 1), e.values(k));
    }
  }
  PcaResult out{e.values.head(k), e.vectors.leftCols(k), SymMat(), gap};
  if (k == d) {
    out.projector = SymMat::identity(d);
  } else {
    const Matrix p = out.vectors * out.vectors.transpose();
    out.projector = SymMat(0.5 * (p + p.transpose()));
  }
  return out;
}

SymMat pca_projector(const SymMat& sigma, int k) { return pca(sigma, k).projector; }

double subspace_dist(const SymMat& p1, const SymMat& p2) {
  if (p1.dim() != p2.dim()) throw InvalidArgument("subspace_dist: dimension mismatch");
  const double t1 = trace(p1);
  const double t2 = trace(p2);
  if (std::abs(t1 - t2) > kTraceTol) {
    std::ostringstream os;
    os << "subspace_dist: projector traces differ (" << t1 << " vs " << t2 << ")";
    throw InvalidArgument(os.str());
  }
  return op_norm(p1 - p2);
}

double truncation_ratio(const Vector& z, const Vector& mu, double theta) {
  if (z.size() != mu.size()) throw InvalidArgument("truncation_ratio: dimension mismatch");
  if (!std::isfinite(theta) || theta <= 0.0) {
    throw InvalidArgument("truncation_ratio: theta must be finite and positive");
  }
  const double nz = z.squaredNorm();
  const double nd = (z - mu).squaredNorm();
  if (nz == 0.0 || nd == 0.0) {
    throw InvalidArgument("truncation_ratio: z and z - mu must be nonzero");
  }
  const double cap = 1.0 / theta;
  const double shifted = std::min(nd, cap) / nd;
  const double plain = std::min(nz, cap) / nz;
  return shifted / plain;
}

std::pair<double, double> truncation_ratio_bounds(double bound, double theta) {
  const double spread = 2.0 * bound * std::sqrt(theta) + bound * bound * theta;
  return {1.0 - spread, 1.0 + spread};
}

}  // namespace heavycov
