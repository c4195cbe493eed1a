#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heavycov/matcore.hpp"

namespace heavycov {

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// m i.i.d. rows X = mu0 + Z Sigma0^{1/2}, Z standard normal. Rejects
/// Sigma0 with eigenvalues below -1e-10 ||Sigma0||.
Samples sample_gaussian(const Vector& mu0, const SymMat& sigma0, long m, std::uint64_t seed);

/// Multivariate Student-t: X = mu0 + Z sqrt(nu / W), Z ~ N(0, scale),
/// W ~ chi^2_nu. The covariance is nu / (nu - 2) * scale. Requires nu > 4 so
/// that fourth moments are finite.
Samples sample_student_t(const Vector& mu0, const SymMat& scale, double nu, long m,
                         std::uint64_t seed);

class Model;

struct ContaminatedSamples {
  Samples samples;
  std::vector<bool> replaced;
  long outliers = 0;
};

/// Draws from `base` with the same seed, then independently replaces each row
/// with probability eps by outlier_norm * u, u uniform on the unit sphere.
/// Requires 0 <= eps < 0.5.
ContaminatedSamples sample_contaminated(const Model& base, double eps, double outlier_norm,
                                        long m, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Models with known first and second moments
// ---------------------------------------------------------------------------

enum class ModelKind { Gaussian, StudentT, TwoPoint, Contaminated };

/// A synthetic distribution. For contaminated models the reported mean and
/// covariance are those of the inlier (base) distribution, which is the
/// estimation target.
class Model {
 public:
  static Model gaussian(Vector mu0, SymMat sigma0);
  static Model student_t(Vector mu0, SymMat scale, double nu);
  /// X = mu0 +/- v with probability 1/2 each.
  static Model two_point(Vector mu0, Vector v);
  static Model contaminated(const Model& base, double eps, double outlier_norm);

  ModelKind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return mu0_.size(); }
  const Vector& mean() const noexcept { return mu0_; }
  SymMat covariance() const;
  /// Stable textual identity covering every parameter; used as a cache key.
  const std::string& id() const noexcept { return id_; }

  double nu() const noexcept { return nu_; }
  double eps() const noexcept { return eps_; }
  double outlier_norm() const noexcept { return outlier_norm_; }
  const Model* base() const noexcept { return base_.get(); }

  Samples draw(long m, std::uint64_t seed) const;

 private:
  Model() = default;

  ModelKind kind_ = ModelKind::Gaussian;
  Vector mu0_;
  SymMat shape_;
  Vector direction_;
  double nu_ = 0.0;
  double eps_ = 0.0;
  double outlier_norm_ = 0.0;
  std::shared_ptr<const Model> base_;
  std::string id_;
};

// ---------------------------------------------------------------------------
// Monte Carlo oracles
// ---------------------------------------------------------------------------

struct McEstimate {
  double value = 0.0;
  /// Delete-a-group jackknife standard error.
  double std_error = 0.0;
};

/// || mean of ||Z||^2 Z Z^T || over N draws of Z = X - mu0 (the matrix
/// variance sigma0^2). Requires N >= 1e4.
McEstimate matrix_variance_mc(const Model& model, long n, std::uint64_t seed);

struct DirectionalMoments {
  /// max over directions of sqrt(E<Z,v>^4) / E<Z,v>^2 (a lower bound on R).
  double kurtosis_r = 0.0;
  /// max over directions of E<Z,v>^4.
  double fourth_moment_b = 0.0;
  int directions = 0;
};

/// Directional fourth-moment statistics over `n_random` random unit
/// directions together with the eigenvectors of the covariance and the
/// coordinate axes. Requires N >= 1e4 and n_random >= 100.
DirectionalMoments directional_moments_mc(const Model& model, long n, int n_random,
                                          std::uint64_t seed);

double kurtosis_bound_mc(const Model& model, long n, int n_random, std::uint64_t seed);

struct GroundTruth {
  Vector mu0;
  SymMat sigma0;
  double sigma0_sq = 0.0;
  double sigma0_sq_se = 0.0;
  double eff_rank = 0.0;
  double dbar = 0.0;
  double kurtosis_r = 0.0;
  double fourth_moment_b = 0.0;

  /// sqrt(sigma0_sq).
  double sigma() const;
  /// Names of violated moment inequalities, each allowed `n_se` standard
  /// errors of slack. Empty when all hold.
  std::vector<std::string> violations(double n_se = 3.0) const;
};

struct GroundTruthOptions {
  long n = 1'000'000;
  int directions = 200;
  std::uint64_t seed = 0x5eedULL;
};

GroundTruth compute_ground_truth(const Model& model, const GroundTruthOptions& opts = {});

/// compute_ground_truth memoized by (model id, options). Thread-safe.
GroundTruth ground_truth(const Model& model, const GroundTruthOptions& opts = {});

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

struct BenchConfig {
  /// gaussian | student_t | contaminated | spiked | lowrank
  std::string model = "gaussian";
  int d = 10;
  double nu = 5.0;
  double eps = 0.05;
  double outlier_norm = 100.0;
  std::vector<long> m_grid{1000};
  int trials = 10;
  double beta = 3.0;
  double sigma_min_factor = 0.125;
  double sigma_max_factor = 8.0;
  /// "theory" (tau = 36 sigma0 sqrt(beta/m)) or "fixed:<tau>".
  std::string tau_rule = "theory";
  std::uint64_t seed = 1;

  /// Not part of the file format.
  GroundTruthOptions truth{};
  /// 0 selects HEAVYCOV_THREADS, or the hardware concurrency.
  int threads = 0;
};

/// Parses the flat `key = value` format. Blank lines and '#' comments are
/// ignored; m_grid is a comma-separated list. Unknown keys and malformed
/// values raise InputError naming the key.
BenchConfig parse_bench_config(std::istream& in, BenchConfig defaults = {});
BenchConfig load_bench_config(const std::string& path, BenchConfig defaults = {});

/// Builds the model a configuration describes.
Model bench_model(const BenchConfig& cfg);

struct TrialRecord {
  long m = 0;
  int m_index = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double op_err_star = 0.0;
  double op_err_sample = 0.0;
  double op_err_fixed = 0.0;
  double fro_err_tau = 0.0;
  std::size_t j_star = 0;
  double sigma_j_star = 0.0;
  double tau = 0.0;
  double seconds = 0.0;
};

struct Quantiles {
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  double max = 0.0;
};

struct BoundCheck {
  double radius = 0.0;
  double violation_freq = 0.0;
  double budget = 0.0;
  bool applicable = true;
  bool within_budget() const { return !applicable || violation_freq <= budget; }
};

struct LevelSummary {
  long m = 0;
  int trials = 0;
  Quantiles op_err_star;
  Quantiles op_err_sample;
  Quantiles op_err_fixed;
  Quantiles fro_err_tau;
  /// Share of trials where the robust estimate beats the sample covariance.
  double star_beats_sample = 0.0;
  /// max op_err_star / (sigma0 sqrt(beta/m)); compare with 18.
  double empirical_constant_star = 0.0;
  /// max op_err_fixed / (sigma0 sqrt(beta/m)); compare with 3.
  double empirical_constant_fixed = 0.0;
  BoundCheck fixed_sigma;
  BoundCheck lepski;
  BoundCheck low_rank;
};

struct BenchReport {
  std::string model_id;
  BenchConfig config;
  GroundTruth truth;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  std::vector<TrialRecord> records;
  std::vector<LevelSummary> levels;
  /// Least-squares slope of log median op_err_star against log m; NaN with
  /// fewer than two grid points.
  double rate_slope = 0.0;
};

/// Runs every (m, trial) pair. Each trial draws from its own stream
/// derive_seed(seed, {trial, m_index}), so results do not depend on the
/// thread count. Throws ConfigError for infeasible (m, beta) pairs.
BenchReport run_benchmark(const BenchConfig& cfg);

Quantiles quantiles(std::vector<double> values);
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Worker count from HEAVYCOV_THREADS, else hardware concurrency (>= 1).
int default_thread_count();

}  // namespace heavycov
