#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "heavycov/errors.hpp"
#include "heavycov/robust_mean.hpp"
#include "heavycov/simlab.hpp"
#include "test_support.hpp"

using namespace heavycov;
using namespace heavycov::testing;

namespace {

// Exhaustive search on a grid over the bounding box, then a finer grid around
// the best cell.
Vector grid_search_median(const Matrix& pts) {
  const double x0 = pts.col(0).minCoeff(), x1 = pts.col(0).maxCoeff();
  const double y0 = pts.col(1).minCoeff(), y1 = pts.col(1).maxCoeff();
  Vector best(2);
  double best_f = std::numeric_limits<double>::infinity();
  const auto scan = [&](double ax, double bx, double ay, double by, double step) {
    for (double x = ax; x <= bx + 1e-15; x += step) {
      for (double y = ay; y <= by + 1e-15; y += step) {
        double f = 0.0;
        for (Eigen::Index j = 0; j < pts.rows(); ++j) {
          f += std::hypot(pts(j, 0) - x, pts(j, 1) - y);
        }
        if (f < best_f) {
          best_f = f;
          best << x, y;
        }
      }
    }
  };
  scan(x0, x1, y0, y1, 1e-3);
  const Vector c = best;
  scan(c(0) - 2e-3, c(0) + 2e-3, c(1) - 2e-3, c(1) + 2e-3, 1e-5);
  return best;
}

}  // namespace

TEST_CASE("geometric median of trivial configurations") {
  Matrix one(1, 2);
  one << 3.0, -1.0;
  const Vector single = geometric_median(one);
  CHECK(single(0) == 3.0);
  CHECK(single(1) == -1.0);

  Matrix square(4, 2);
  square << 0, 0, 2, 0, 0, 2, 2, 2;
  const Vector c = geometric_median(square);
  CHECK(c(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(c(1) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("geometric median matches a grid-search oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix pts(50, 2);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = unif(rng);
  const Vector z = geometric_median(pts);
  const Vector oracle = grid_search_median(pts);
  CHECK((z - oracle).norm() <= 1e-2);
  CHECK(geometric_median_objective(pts, z) <= geometric_median_objective(pts, oracle) + 1e-9);
}

TEST_CASE("geometric median stops at a data point that is optimal") {
  // Three copies at the origin outweigh the two unit pulls.
  Matrix pts(5, 2);
  pts << 0, 0, 0, 0, 0, 0, 1, 0, 0, 1;
  const Vector z = geometric_median(pts);
  CHECK(z.norm() <= 1e-10);

  // Odd number of collinear points: the middle one.
  Matrix line(5, 1);
  line << -4, -1, 0.5, 2, 10;
  CHECK(geometric_median(line)(0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("geometric median equivariance and optimality") {
  std::mt19937_64 rng(8);
  const double tol = 1e-8;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 3 + t % 20;
    const Eigen::Index d = 1 + t % 6;
    const Matrix pts = random_matrix(n, d, rng);
    const Vector z = geometric_median(pts, {tol, 1000});
    const double scale = geometric_median_objective(pts, z) / static_cast<double>(n);

    const Vector shift = random_vector(d, rng, 5.0);
    const Matrix moved = pts.rowwise() + shift.transpose();
    CHECK((geometric_median(moved, {tol, 1000}) - (z + shift)).norm() <=
          2.0 * tol * std::max(1.0, scale + shift.norm()));

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(n, d);
    for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);
    CHECK((geometric_median(shuffled, {tol, 1000}) - z).norm() <= tol * std::max(1.0, scale) * 10);

    const double fz = geometric_median_objective(pts, z);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(fz <= geometric_median_objective(pts, pts.row(i).transpose()) + 1e-12);
    }
    CHECK(fz <= geometric_median_objective(pts, pts.colwise().mean().transpose()) + 1e-12);
  }
}

TEST_CASE("geometric median reports non-convergence") {
  std::mt19937_64 rng(2);
  const Matrix pts = random_matrix(30, 3, rng);
  try {
    geometric_median(pts, {1e-15, 1});
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate().size() == 3);
    CHECK(e.last_iterate().allFinite());
    CHECK(e.gap_bound() >= 0.0);
    const Vector best = geometric_median(pts);
    CHECK(geometric_median_objective(pts, e.last_iterate()) - geometric_median_objective(pts, best) <=
          e.gap_bound() + 1e-12);
  }
  CHECK_THROWS_AS(geometric_median(Matrix(0, 2)), InvalidArgument);
  CHECK_THROWS_AS(geometric_median(pts, {0.0, 10}), InvalidArgument);
}

TEST_CASE("median-of-means block count") {
  CHECK(mom_block_count(2.0) == 8);
  CHECK(mom_block_count(3.0) == 11);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> beta(1.0, 50.0);
  for (int t = 0; t < 100; ++t) {
    double b = beta(rng);
    if (b <= 1.0) b = 1.5;
    CHECK(mom_block_count(b) == static_cast<int>(std::floor(3.5 * b)) + 1);
  }
  CHECK_THROWS_AS(mom_block_count(1.0), InvalidArgument);
  CHECK_THROWS_AS(mom_block_count(0.5), InvalidArgument);
}

TEST_CASE("median-of-means on structured inputs") {
  SUBCASE("identical rows give that row exactly") {
    Vector v(3);
    v << 0.1, -7.3, 1e-3;
    const Matrix x = Vector::Ones(100) * v.transpose();
    const MoMResult r = median_of_means(x, 2.0);
    CHECK(r.k == 8);
    CHECK(r.mu_hat == v);
  }
  SUBCASE("blocks with a common mean") {
    // Every block of 10 rows alternates +/- a fixed offset around c.
    Vector c(2);
    c << 4.0, -2.0;
    Matrix x(80, 2);
    for (int i = 0; i < 80; ++i) {
      x.row(i) = c.transpose() + ((i % 2 == 0) ? 1.0 : -1.0) * Eigen::RowVector2d(0.5, 0.25);
    }
    const MoMResult r = median_of_means(x, 2.0);  // k = 8, blocks of 10
    CHECK((r.mu_hat - c).norm() <= 1e-8);
  }
  SUBCASE("leftover rows are ignored") {
    std::mt19937_64 rng(6);
    Matrix x = random_matrix(103, 4, rng);
    const MoMResult a = median_of_means(x, 2.0);  // k = 8, block size 12, uses 96 rows
    x.bottomRows(7).setConstant(1e6);
    const MoMResult b = median_of_means(x, 2.0);
    CHECK(a.mu_hat == b.mu_hat);
  }
  SUBCASE("the estimate lies in the convex hull of the block means") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
      const Matrix x = random_matrix(200, 5, rng, 3.0);
      const MoMResult r = median_of_means(x, 3.0);
      for (int k = 0; k < 200; ++k) {
        const Vector v = random_vector(5, rng).normalized();
        CHECK(v.dot(r.mu_hat) <= (r.block_means * v).maxCoeff() + 1e-8);
      }
    }
  }
}

TEST_CASE("median-of-means preconditions") {
  const Matrix x = Matrix::Ones(15, 2);
  CHECK_THROWS_AS(median_of_means(x, 1.0), InvalidArgument);
  try {
    median_of_means(x, 2.0);
    FAIL("expected SampleSizeError");
  } catch (const SampleSizeError& e) {
    CHECK(e.minimum_m() == 16);
    CHECK(std::string(e.what()).find("16") != std::string::npos);
  }
  CHECK_NOTHROW(median_of_means(Matrix::Ones(16, 2), 2.0));
}

TEST_CASE("median-of-means deviation frequency stays within e^-beta") {
  const int d = 10;
  const long m = 1000;
  const double beta = 3.0;
  const Vector mu0 = Vector::Zero(d);
  const Model model = Model::gaussian(mu0, SymMat::identity(d));
  const double radius = mom_deviation_radius(static_cast<double>(d), beta, m);
  CHECK(radius == doctest::Approx(11.0 * std::sqrt(10.0 * 4.0 / 1000.0)));
  int hits = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    const MoMResult r = median_of_means(model.draw(m, 1000 + t), beta);
    if ((r.mu_hat - mu0).norm() >= radius) ++hits;
  }
  CHECK(static_cast<double>(hits) / trials <= std::exp(-beta));
  CHECK(mom_deviation_radius_2beta(10.0, beta, m) ==
        doctest::Approx(11.0 * std::sqrt(2.0 * 10.0 * 3.0 / 1000.0)));
}
