#pragma once

#include "heavycov/matcore.hpp"

namespace heavycov {

struct GeometricMedianOptions {
  /// Relative tolerance on the iterate step, measured against the mean
  /// distance from the iterate to the points.
  double tol = 1e-8;
  int max_iter = 1000;
};

/// argmin_z sum_j ||z - x_j||_2 over the rows of `points`.
///
/// Weiszfeld iteration started from the coordinate-wise mean, with the
/// Vardi-Zhang modification so that iterates landing on a data point either
/// step off along the negative subgradient or stop there when the point
/// satisfies the optimality condition. Throws ConvergenceError carrying the
/// last iterate and a certified objective-gap bound when max_iter is hit.
Vector geometric_median(const Matrix& points, const GeometricMedianOptions& opts = {});

/// sum_j ||z - x_j||_2
double geometric_median_objective(const Matrix& points, const Vector& z);

struct MoMResult {
  Vector mu_hat;
  int k = 0;
  /// k x d, one block mean per row.
  Matrix block_means;
  double beta = 0.0;
};

/// Number of blocks used for confidence parameter beta: floor(3.5 beta) + 1.
int mom_block_count(double beta);

/// Smallest sample size the median-of-means estimator accepts for beta.
long mom_min_samples(double beta);

/// Median-of-means: the first k * floor(m/k) rows are split into k contiguous
/// blocks, and the geometric median of the block means is returned.
/// Throws InvalidArgument for beta <= 1 and SampleSizeError when k > m/2.
MoMResult median_of_means(const Samples& samples, double beta,
                          const GeometricMedianOptions& opts = {});

/// 11 sqrt(tr(Sigma0) (beta + 1) / m), holding with probability >= 1 - e^{-beta}.
double mom_deviation_radius(double trace_sigma0, double beta, long m);

/// 11 sqrt(2 tr(Sigma0) beta / m). An alternative form of the same radius;
/// differs from mom_deviation_radius by (beta + 1) vs 2 beta.
double mom_deviation_radius_2beta(double trace_sigma0, double beta, long m);

}  // namespace heavycov
