#include "heavycov/robust_mean.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "heavycov/errors.hpp"

namespace heavycov {

namespace {

constexpr double kCoincide = 1e-12;

// Upper bound on f(z) - min f. The minimizer lies in the convex hull of the
// points, so ||z - z*|| <= max_j ||z - x_j||, and convexity gives
// f(z) - f(z*) <= ||g|| ||z - z*|| for the minimum-norm subgradient g.
double gap_bound(const Matrix& points, const Vector& z, double coincide) {
  Vector grad = Vector::Zero(points.cols());
  double ties = 0.0;
  double radius = 0.0;
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    const Vector diff = z - points.row(j).transpose();
    const double dist = diff.norm();
    radius = std::max(radius, dist);
    if (dist <= coincide) {
      ties += 1.0;
    } else {
      grad += diff / dist;
    }
  }
  const double g = std::max(0.0, grad.norm() - ties);
  return g * radius;
}

}  // namespace

double geometric_median_objective(const Matrix& points, const Vector& z) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    total += (points.row(j).transpose() - z).norm();
  }
  return total;
}

Vector geometric_median(const Matrix& points, const GeometricMedianOptions& opts) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 1) throw InvalidArgument("geometric_median: need at least one point");
  if (!(opts.tol > 0.0)) throw InvalidArgument("geometric_median: tol must be positive");
  if (opts.max_iter < 1) throw InvalidArgument("geometric_median: max_iter must be positive");
  if (!points.allFinite()) throw InvalidArgument("geometric_median: points must be finite");
  if (n == 1) return points.row(0).transpose();

  Vector z = points.colwise().mean().transpose();
  const double extent = (points.rowwise() - z.transpose()).rowwise().norm().maxCoeff();
  if (extent == 0.0) return points.row(0).transpose();
  const double coincide = kCoincide * extent;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Vector weighted = Vector::Zero(d);
    Vector pull = Vector::Zero(d);
    double weight_sum = 0.0;
    double ties = 0.0;
    double objective = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    Eigen::Index nearest_idx = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vector diff = points.row(j).transpose() - z;
      const double dist = diff.norm();
      objective += dist;
      if (dist < nearest) {
        nearest = dist;
        nearest_idx = j;
      }
      if (dist <= coincide) {
        ties += 1.0;
        continue;
      }
      const double w = 1.0 / dist;
      weighted += w * points.row(j).transpose();
      pull += w * diff;
      weight_sum += w;
    }

    // The nearest data point is the exact minimizer when the unit pulls of
    // the remaining points sum to norm at most its multiplicity.
    if (ties == 0.0 && nearest < 1e-3 * extent) {
      const Vector candidate = points.row(nearest_idx).transpose();
      Vector r = Vector::Zero(d);
      double mult = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const Vector diff = points.row(j).transpose() - candidate;
        const double dist = diff.norm();
        if (dist <= coincide) {
          mult += 1.0;
        } else {
          r += diff / dist;
        }
      }
      if (r.norm() <= mult) return candidate;
    }

    if (weight_sum == 0.0) return z;
    const Vector target = weighted / weight_sum;
    const double r = pull.norm();
    Vector next;
    if (ties == 0.0) {
      next = target;
    } else {
      if (r <= ties) return z;
      const double a = ties / r;
      next = (1.0 - a) * target + a * z;
    }

    const double step = (next - z).norm();
    z = std::move(next);
    const double scale = objective / static_cast<double>(n);
    if (step <= opts.tol * scale) return z;
  }

  const double gap = gap_bound(points, z, coincide);
  std::ostringstream os;
  os << "geometric_median: no convergence after " << opts.max_iter
     << " iterations (objective gap bound " << gap << ")";
  throw ConvergenceError(os.str(), z, gap);
}

int mom_block_count(double beta) {
  if (!std::isfinite(beta) || beta <= 1.0) {
    throw InvalidArgument("median_of_means: beta must be finite and > 1");
  }
  return static_cast<int>(std::floor(3.5 * beta)) + 1;
}

long mom_min_samples(double beta) { return 2L * mom_block_count(beta); }

MoMResult median_of_means(const Samples& samples, double beta,
                          const GeometricMedianOptions& opts) {
  const int k = mom_block_count(beta);
  const Eigen::Index m = samples.rows();
  const Eigen::Index d = samples.cols();
  if (2L * k > static_cast<long>(m)) {
    std::ostringstream os;
    os << "median_of_means: beta = " << beta << " needs k = " << k
       << " blocks and at least m = " << 2L * k << " samples, got m = " << m;
    throw SampleSizeError(os.str(), 2L * k);
  }
  if (!samples.allFinite()) throw InvalidArgument("median_of_means: samples must be finite");

  const Eigen::Index block = m / k;
  Matrix means(k, d);
  for (int b = 0; b < k; ++b) {
    // Accumulate offsets from the block's first row so constant blocks
    // reproduce their value exactly.
    const Eigen::Index first = b * block;
    const Vector anchor = samples.row(first).transpose();
    Vector acc = Vector::Zero(d);
    for (Eigen::Index i = first + 1; i < first + block; ++i) {
      acc += samples.row(i).transpose() - anchor;
    }
    means.row(b) = (anchor + acc / static_cast<double>(block)).transpose();
  }

  MoMResult out;
  out.mu_hat = geometric_median(means, opts);
  out.k = k;
  out.block_means = std::move(means);
  out.beta = beta;
  return out;
}

double mom_deviation_radius(double trace_sigma0, double beta, long m) {
  return 11.0 * std::sqrt(trace_sigma0 * (beta + 1.0) / static_cast<double>(m));
}

double mom_deviation_radius_2beta(double trace_sigma0, double beta, long m) {
  return 11.0 * std::sqrt(2.0 * trace_sigma0 * beta / static_cast<double>(m));
}

}  // namespace heavycov
