#pragma once

#include <utility>
#include <vector>

#include "heavycov/matcore.hpp"
#include "heavycov/robust_mean.hpp"

namespace heavycov {

/// (1/m) sum_i (X_i - mu)(X_i - mu)^T
SymMat sample_covariance_about(const Samples& samples, const Vector& mu);

/// Sample covariance centred at the sample mean, normalized by 1/m.
SymMat sample_covariance(const Samples& samples);

/// Truncated covariance estimator at fixed theta:
///
///   (1/(m theta)) sum_i psi(theta (X_i - mu)(X_i - mu)^T)
///
/// evaluated through the rank-one identity, so that each residual r_i
/// contributes r_i r_i^T * min(1, 1/(theta ||r_i||^2)). Residuals that are
/// exactly zero contribute nothing.
SymMat truncated_cov(const Samples& samples, const Vector& mu_hat, double theta);

/// theta = (1/sigma) sqrt(beta/m)
double theta_for_sigma(double sigma, double beta, long m);

struct FixedSigmaEstimate {
  SymMat sigma_hat;
  MoMResult mean;
  double theta = 0.0;
};

/// Median-of-means centring followed by truncated_cov at
/// theta = (1/sigma) sqrt(beta/m).
FixedSigmaEstimate estimate_fixed_sigma(const Samples& samples, double sigma, double beta);

struct LepskiConfig {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double beta = 0.0;

  /// Throws InvalidArgument unless 0 < sigma_min <= sigma_max < inf, beta > 1.
  void validate() const;
};

/// sigma_j = sigma_min 2^j for every j >= 0 with sigma_j < 2 sigma_max.
std::vector<double> lepski_grid(double sigma_min, double sigma_max);

struct LepskiReport {
  std::vector<double> sigmas;
  std::vector<double> thetas;
  std::vector<SymMat> estimates;
  /// distances[j][k] = ||estimates[k] - estimates[j]|| for k > j, else 0.
  std::vector<std::vector<double>> distances;
  std::size_t j_star = 0;
  SymMat sigma_star;
  MoMResult mean;
};

/// Smallest j such that every coarser level k > j satisfies
/// distances[j][k] <= 6 sigma_k sqrt(beta/m). Always exists: the condition
/// is vacuous at the last level.
std::size_t lepski_select(const std::vector<std::vector<double>>& distances,
                          const std::vector<double>& sigmas, double beta, long m);

/// Lepski-adaptive estimator. One median-of-means centre is shared by every
/// grid level.
LepskiReport lepski_estimate(const Samples& samples, const LepskiConfig& config);

/// sum_i max(lambda_i - tau/2, 0) v_i v_i^T.
///
/// This is the minimizer of ||A - Sigma||_F^2 + tau ||A||_1 over positive
/// semi-definite A (and over all symmetric A whenever no eigenvalue of Sigma
/// lies below -tau/2).
SymMat soft_threshold(const SymMat& sigma, double tau);

struct PcaResult {
  /// Top-k eigenvalues, descending.
  Vector values;
  /// d x k matrix of the matching eigenvectors.
  Matrix vectors;
  SymMat projector;
  /// lambda_k - lambda_{k+1}; zero when k == d.
  double gap = 0.0;
};

/// Top-k eigenpairs and the orthogonal projector onto their span.
/// For k < d the gap lambda_k - lambda_{k+1} must exceed 1e-10 ||Sigma||,
/// otherwise DegenerateSpectrumError is thrown.
PcaResult pca(const SymMat& sigma, int k);

SymMat pca_projector(const SymMat& sigma, int k);

/// ||P1 - P2|| for projectors of equal rank.
double subspace_dist(const SymMat& p1, const SymMat& p2);

/// h_mu(z) = [(||z-mu||^2 ^ 1/theta) / ||z-mu||^2] / [(||z||^2 ^ 1/theta) / ||z||^2]
double truncation_ratio(const Vector& z, const Vector& mu, double theta);

/// [1 - 2 B sqrt(theta) - B^2 theta, 1 + 2 B sqrt(theta) + B^2 theta]: the
/// deterministic range of truncation_ratio over ||mu||_2 <= B.
std::pair<double, double> truncation_ratio_bounds(double bound, double theta);

}  // namespace heavycov
