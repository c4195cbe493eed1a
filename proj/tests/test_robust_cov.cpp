#include <doctest.h>

#include <cmath>
#include <random>

#include "heavycov/errors.hpp"
#include "heavycov/robust_cov.hpp"
#include "heavycov/simlab.hpp"
#include "test_support.hpp"

using namespace heavycov;
using namespace heavycov::testing;

namespace {

// Sum of per-summand matrix functions, evaluated through eigendecompositions.
Matrix truncated_cov_via_eigen(const Samples& x, const Vector& mu, double theta) {
  const Eigen::Index d = x.cols();
  Matrix acc = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector r = x.row(i).transpose() - mu;
    acc += matrix_function([&](double v) { return psi(theta * v); }, SymMat::outer(r)).matrix();
  }
  return acc / (static_cast<double>(x.rows()) * theta);
}

Matrix plain_covariance(const Samples& x, const Vector& mu) {
  const Eigen::Index d = x.cols();
  Matrix acc = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector r = x.row(i).transpose() - mu;
    acc += r * r.transpose();
  }
  return acc / static_cast<double>(x.rows());
}

double objective(const Matrix& a, const Matrix& sigma, double tau) {
  return (a - sigma).squaredNorm() + tau * nuclear_norm(SymMat(a));
}

Matrix psd_part(const Matrix& a) {
  return matrix_function([](double x) { return std::max(x, 0.0); }, SymMat(0.5 * (a + a.transpose())))
      .matrix();
}

}  // namespace

TEST_CASE("truncated_cov direct examples") {
  Samples x(1, 2);
  x << 2.0, 0.0;
  const SymMat s = truncated_cov(x, Vector::Zero(2), 1.0);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 1) == 0.0);

  const Samples constant = Matrix::Constant(20, 3, 1.5);
  const SymMat zero = truncated_cov(constant, Vector::Constant(3, 1.5), 0.7);
  CHECK(zero.matrix().isZero(0.0));

  CHECK_THROWS_AS(truncated_cov(x, Vector::Zero(3), 1.0), InvalidArgument);
  CHECK_THROWS_AS(truncated_cov(x, Vector::Zero(2), 0.0), InvalidArgument);
  CHECK_THROWS_AS(truncated_cov(x, Vector::Zero(2), -1.0), InvalidArgument);
}

TEST_CASE("truncated_cov equals the sample covariance below the truncation level") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 30; ++t) {
    const Samples x = random_matrix(40 + t, 5, rng, 2.0);
    const Vector mu = x.colwise().mean().transpose();
    const double max_r2 = (x.rowwise() - mu.transpose()).rowwise().squaredNorm().maxCoeff();
    const double theta = (t % 2 == 0 ? 1.0 : 0.3) / max_r2;
    CHECK(max_abs_diff(truncated_cov(x, mu, theta).matrix(), plain_covariance(x, mu)) <= 1e-12);
  }
}

TEST_CASE("truncated_cov agrees with the per-summand matrix-function route") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const Samples x = random_matrix(50, 6, rng, 3.0);
    const Vector mu = random_vector(6, rng, 0.5);
    const double theta = 0.02 + 0.1 * t;
    const SymMat fast = truncated_cov(x, mu, theta);
    CHECK(max_abs_diff(fast.matrix(), truncated_cov_via_eigen(x, mu, theta)) <= 1e-10);
    const EigenDecomp e = sym_eigen(fast);
    CHECK(e.values(5) >= -1e-10);
    CHECK(op_norm(fast) <= 1.0 / theta + 1e-12);
  }
}

TEST_CASE("truncated_cov damps a single exploding row") {
  std::mt19937_64 rng(14);
  const Samples x = random_matrix(60, 4, rng);
  const Vector mu = Vector::Zero(4);
  const double theta = 0.5;
  const SymMat base = truncated_cov(x, mu, theta);
  for (double c : {1e2, 1e4, 1e8}) {
    Samples y = x;
    y.row(7) *= c;
    CHECK(op_norm(truncated_cov(y, mu, theta) - base) <= 2.0 / (60.0 * theta) + 1e-12);
  }
}

TEST_CASE("truncated_cov is rotation equivariant") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 20; ++t) {
    const Samples x = random_matrix(80, 5, rng, 2.0);
    const Vector mu = random_vector(5, rng);
    const Matrix q = random_orthogonal(5, rng);
    const double theta = 0.05;
    const Matrix lhs = truncated_cov(x * q.transpose(), q * mu, theta).matrix();
    const Matrix rhs = q * truncated_cov(x, mu, theta).matrix() * q.transpose();
    CHECK(max_abs_diff(lhs, rhs) <= 1e-10);
  }
}

TEST_CASE("estimate_fixed_sigma uses theta = sqrt(beta/m) / sigma") {
  std::mt19937_64 rng(16);
  const Samples x = random_matrix(100, 3, rng);
  const FixedSigmaEstimate e = estimate_fixed_sigma(x, 2.0, 4.0);
  CHECK(e.theta == doctest::Approx(0.1));
  CHECK(e.mean.k == 15);
  CHECK(max_abs_diff(e.sigma_hat.matrix(), truncated_cov(x, e.mean.mu_hat, 0.1).matrix()) == 0.0);

  const FixedSigmaEstimate zero = estimate_fixed_sigma(Matrix::Constant(100, 3, -2.0), 2.0, 4.0);
  CHECK(zero.sigma_hat.matrix().isZero(0.0));

  CHECK_THROWS_AS(estimate_fixed_sigma(x, 2.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(estimate_fixed_sigma(x, 0.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(estimate_fixed_sigma(x.topRows(20), 2.0, 4.0), SampleSizeError);
}

TEST_CASE("lepski grid") {
  const auto single = lepski_grid(1.5, 1.5);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 1.5);

  const auto grid = lepski_grid(0.25, 8.0);
  REQUIRE(grid.size() == 6);  // 0.25 .. 8; 16 is not below 2 sigma_max
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] == 2.0 * grid[i - 1]);
  CHECK(grid.back() < 16.0);
  CHECK(static_cast<double>(grid.size()) <= 1.0 + std::log2(8.0 / 0.25));

  CHECK_THROWS_AS(lepski_grid(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(lepski_grid(2.0, 1.0), InvalidArgument);
}

TEST_CASE("lepski_select picks the smallest level consistent with all coarser ones") {
  const std::vector<double> sigmas{1.0, 2.0, 4.0};
  const double beta = 4.0;
  const long m = 100;  // sqrt(beta/m) = 0.2, radii 6 sigma_k 0.2 = 2.4, 4.8
  std::vector<std::vector<double>> dist(3, std::vector<double>(3, 0.0));
  CHECK(lepski_select(dist, sigmas, beta, m) == 0);

  dist[0][1] = 2.5;  // > 2.4: level 0 rejected
  CHECK(lepski_select(dist, sigmas, beta, m) == 1);

  dist[0][1] = 6.0 * 2.0 * std::sqrt(beta / m);  // tie counts as consistent
  CHECK(lepski_select(dist, sigmas, beta, m) == 0);

  dist[0][1] = 10.0;
  dist[1][2] = 5.0;  // > 4.8: level 1 rejected too
  CHECK(lepski_select(dist, sigmas, beta, m) == 2);
}

TEST_CASE("lepski_estimate structure and invariants") {
  std::mt19937_64 rng(17);
  SUBCASE("singleton grid") {
    const Samples x = random_matrix(200, 4, rng);
    const LepskiReport r = lepski_estimate(x, {2.0, 2.0, 3.0});
    REQUIRE(r.sigmas.size() == 1);
    CHECK(r.j_star == 0);
    CHECK(r.sigma_star.matrix() == r.estimates[0].matrix());
  }
  SUBCASE("constant samples") {
    const LepskiReport r = lepski_estimate(Matrix::Constant(100, 3, 4.0), {0.1, 100.0, 2.0});
    CHECK(r.j_star == 0);
    CHECK(r.sigma_star.matrix().isZero(0.0));
  }
  SUBCASE("selection condition holds on heavy-tailed data") {
    for (int t = 0; t < 10; ++t) {
      const Samples x =
          sample_student_t(Vector::Ones(6), SymMat::identity(6), 4.5, 500, 100 + t);
      const LepskiConfig cfg{0.05, 500.0, 2.5};
      const LepskiReport r = lepski_estimate(x, cfg);
      const double rate = std::sqrt(cfg.beta / 500.0);
      REQUIRE(r.j_star < r.sigmas.size());
      for (std::size_t k = r.j_star + 1; k < r.sigmas.size(); ++k) {
        CHECK(op_norm(r.estimates[k] - r.estimates[r.j_star]) <= 6.0 * r.sigmas[k] * rate);
      }
      CHECK(r.sigma_star.matrix() == r.estimates[r.j_star].matrix());
      for (std::size_t j = 0; j < r.sigmas.size(); ++j) {
        CHECK(r.thetas[j] == doctest::Approx(rate / r.sigmas[j]));
        const Matrix single = truncated_cov(x, r.mean.mu_hat, r.thetas[j]).matrix();
        CHECK(r.estimates[j].matrix() == single);
      }
    }
  }
  CHECK_THROWS_AS(lepski_estimate(Matrix::Ones(50, 2), {1.0, 2.0, 1.0}), InvalidArgument);
}

TEST_CASE("soft_threshold") {
  std::mt19937_64 rng(18);
  const SymMat a = random_symmetric(6, rng);
  const SymMat p = random_psd(6, rng);
  CHECK(max_abs_diff(soft_threshold(p, 0.0).matrix(), p.matrix()) <= 1e-10);

  Vector diag(2);
  diag << 5.0, 1.0;
  const SymMat s = soft_threshold(SymMat::diagonal(diag), 4.0);
  CHECK(s(0, 0) == doctest::Approx(3.0));
  CHECK(std::abs(s(1, 1)) <= 1e-12);
  CHECK(std::abs(s(0, 1)) <= 1e-12);

  CHECK_THROWS_AS(soft_threshold(a, -1.0), InvalidArgument);
}

TEST_CASE("soft_threshold beats perturbed PSD candidates") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> log_scale(-6.0, 0.5);
  const double tau = 1.0;
  for (int t = 0; t < 20; ++t) {
    const SymMat sigma = random_symmetric(8, rng);
    const Matrix out = soft_threshold(sigma, tau).matrix();
    const double best = objective(out, sigma.matrix(), tau);
    for (int c = 0; c < 200; ++c) {
      const Matrix candidate =
          psd_part(out + random_matrix(8, 8, rng, std::pow(10.0, log_scale(rng))));
      CHECK(best <= objective(candidate, sigma.matrix(), tau) + 1e-9);
    }
  }
}

TEST_CASE("soft_threshold rank is monotone and the map is nonexpansive") {
  std::mt19937_64 rng(20);
  for (int t = 0; t < 30; ++t) {
    const SymMat a = random_symmetric(7, rng);
    const SymMat b = random_symmetric(7, rng);
    Eigen::Index prev_rank = 8;
    for (double tau : {0.0, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const Vector ev = sym_eigen(soft_threshold(a, tau)).values;
      const Eigen::Index rank = (ev.array() > 1e-10).count();
      CHECK(rank <= prev_rank);
      prev_rank = rank;
      CHECK(fro_norm(soft_threshold(a, tau) - soft_threshold(b, tau)) <= fro_norm(a - b) + 1e-12);
    }
  }
}

TEST_CASE("pca projector") {
  Vector diag(3);
  diag << 3.0, 2.0, 1.0;
  const SymMat p = pca_projector(SymMat::diagonal(diag), 2);
  Vector expect(3);
  expect << 1.0, 1.0, 0.0;
  CHECK(max_abs_diff(p.matrix(), Matrix(expect.asDiagonal())) <= 1e-12);

  std::mt19937_64 rng(22);
  for (int t = 0; t < 30; ++t) {
    Vector spectrum = Vector::LinSpaced(8, 8.0, 1.0);
    const SymMat s = random_with_spectrum(spectrum, rng);
    const PcaResult r = pca(s, 3);
    const Matrix pm = r.projector.matrix();
    CHECK((pm * pm - pm).norm() <= 1e-10);
    CHECK(std::abs(pm.trace() - 3.0) <= 1e-10);
    CHECK(r.gap == doctest::Approx(1.0));
    const EigenDecomp e = sym_eigen(s);
    for (int k = 0; k < 3; ++k) {
      CHECK((pm * e.vectors.col(k) - e.vectors.col(k)).norm() <= 1e-9);
    }
  }

  CHECK(max_abs_diff(pca_projector(random_psd(4, rng), 4).matrix(), Matrix::Identity(4, 4)) == 0.0);
  CHECK_THROWS_AS(pca(SymMat::identity(4), 2), DegenerateSpectrumError);
  CHECK_THROWS_AS(pca(SymMat::identity(4), 5), InvalidArgument);
  CHECK_THROWS_AS(pca(SymMat::identity(4), 0), InvalidArgument);
}

TEST_CASE("subspace distance") {
  const SymMat p = pca_projector(SymMat::diagonal(Vector::LinSpaced(4, 4.0, 1.0)), 2);
  CHECK(subspace_dist(p, p) == 0.0);

  Vector e1 = Vector::Zero(3), e2 = Vector::Zero(3);
  e1(0) = 1.0;
  e2(1) = 1.0;
  CHECK(subspace_dist(SymMat::outer(e1), SymMat::outer(e2)) == doctest::Approx(1.0));

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(0.0, M_PI / 2);
  for (int t = 0; t < 50; ++t) {
    const double phi = angle(rng);
    Vector u(2), v(2);
    u << 1.0, 0.0;
    v << std::cos(phi), std::sin(phi);
    const Matrix q = random_orthogonal(2, rng);
    const double dist = subspace_dist(SymMat::outer(q * u), SymMat::outer(q * v));
    CHECK(std::abs(dist - std::sin(phi)) <= 1e-8);
  }
  CHECK_THROWS_AS(subspace_dist(SymMat::outer(e1), SymMat::identity(3)), InvalidArgument);
}

TEST_CASE("projector distance stays under twice the perturbation over the gap") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> noise(0.01, 3.0);
  for (int t = 0; t < 200; ++t) {
    Vector spectrum(6);
    spectrum << 10.0, 9.0, 4.0, 2.0, 1.0, 0.5;
    const SymMat s0 = random_with_spectrum(spectrum, rng);
    const SymMat e = random_symmetric(6, rng, noise(rng));
    const int k = 2;
    const double gap = 5.0;
    const SymMat s1 = s0 + e;
    try {
      const double dist = subspace_dist(pca_projector(s0, k), pca_projector(s1, k));
      CHECK(dist <= 2.0 * op_norm(e) / gap + 1e-12);
    } catch (const DegenerateSpectrumError&) {
      // Perturbations this large can merge eigenvalues; skip.
    }
  }
}

TEST_CASE("truncation ratio") {
  Vector z(2), mu(2);
  z << 0.3, 0.2;
  mu << 0.1, -0.1;
  CHECK(truncation_ratio(z, mu, 1.0) == 1.0);

  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> log_u(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Index d = 1 + t % 8;
    const double theta = std::pow(10.0, log_u(rng));
    const double bound = std::pow(10.0, log_u(rng)) / std::sqrt(theta);
    const Vector zz = random_vector(d, rng, std::pow(10.0, log_u(rng)) / std::sqrt(theta));
    Vector m = random_vector(d, rng);
    m *= bound * unit(rng) / m.norm();
    if (zz.squaredNorm() == 0.0 || (zz - m).squaredNorm() == 0.0) continue;
    const double h = truncation_ratio(zz, m, theta);
    const auto [lo, hi] = truncation_ratio_bounds(bound, theta);
    if (h < lo || h > hi) ++violations;
  }
  CHECK(violations == 0);

  CHECK_THROWS_AS(truncation_ratio(Vector::Zero(2), mu, 1.0), InvalidArgument);
  CHECK_THROWS_AS(truncation_ratio(mu, mu, 1.0), InvalidArgument);
  CHECK_THROWS_AS(truncation_ratio(z, mu, 0.0), InvalidArgument);
}
