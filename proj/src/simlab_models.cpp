#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "heavycov/errors.hpp"
#include "heavycov/rng.hpp"
#include "heavycov/simlab.hpp"

namespace heavycov {

namespace {

constexpr double kPsdTol = 1e-10;
constexpr int kJackknifeGroups = 100;
constexpr long kMinMcSamples = 10'000;
constexpr std::uint64_t kContaminationStream = 0xC0117A3ULL;
constexpr std::uint64_t kDirectionStream = 0xD12EC7ULL;

Matrix psd_sqrt(const SymMat& a, const char* who) {
  const EigenDecomp e = sym_eigen(a);
  const double scale = a.dim() == 0 ? 0.0 : e.values.cwiseAbs().maxCoeff();
  if (a.dim() > 0 && e.values(a.dim() - 1) < -kPsdTol * scale) {
    std::ostringstream os;
    os << who << ": matrix is not positive semi-definite (min eigenvalue "
       << e.values(a.dim() - 1) << ")";
    throw InvalidArgument(os.str());
  }
  const Vector roots = e.values.cwiseMax(0.0).cwiseSqrt();
  const Matrix r = e.vectors * roots.asDiagonal() * e.vectors.transpose();
  return 0.5 * (r + r.transpose());
}

void check_draw_args(const Vector& mu0, const SymMat& shape, long m, const char* who) {
  if (m < 0) throw InvalidArgument(std::string(who) + ": m must be nonnegative");
  if (mu0.size() != shape.dim()) {
    throw InvalidArgument(std::string(who) + ": mean and covariance dimensions differ");
  }
  if (!mu0.allFinite()) throw InvalidArgument(std::string(who) + ": mean must be finite");
}

Matrix standard_normal(long m, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix z(m, d);
  for (long i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  return z;
}

Samples gaussian_rows(const Vector& mu0, const Matrix& root, long m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const Matrix z = standard_normal(m, mu0.size(), rng);
  Samples x = z * root;
  x.rowwise() += mu0.transpose();
  return x;
}

Samples student_rows(const Vector& mu0, const Matrix& root, double nu, long m,
                     std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(nu);
  const Eigen::Index d = mu0.size();
  Matrix z(m, d);
  Vector mix(m);
  for (long i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    mix(i) = std::sqrt(nu / chi2(rng));
  }
  Samples x = (z * root).array().colwise() * mix.array();
  x.rowwise() += mu0.transpose();
  return x;
}

Samples two_point_rows(const Vector& mu0, const Vector& v, long m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  Samples x(m, mu0.size());
  for (long i = 0; i < m; ++i) {
    x.row(i) = (coin(rng) ? Vector(mu0 + v) : Vector(mu0 - v)).transpose();
  }
  return x;
}

ContaminatedSamples contaminate(Samples x, double eps, double outlier_norm, std::uint64_t seed) {
  if (!std::isfinite(eps) || eps < 0.0 || eps >= 0.5) {
    throw InvalidArgument("sample_contaminated: eps must lie in [0, 0.5)");
  }
  if (!std::isfinite(outlier_norm) || outlier_norm < 0.0) {
    throw InvalidArgument("sample_contaminated: outlier_norm must be finite and nonnegative");
  }
  ContaminatedSamples out;
  const long m = static_cast<long>(x.rows());
  out.replaced.assign(static_cast<std::size_t>(m), false);
  Rng rng = make_rng(derive_seed(seed, {kContaminationStream}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  Vector u(x.cols());
  for (long i = 0; i < m; ++i) {
    const bool hit = unif(rng) < eps;
    // Always consume the direction draws so row i's fate is independent of
    // earlier rows' outcomes.
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = normal(rng);
    if (hit && u.norm() > 0.0) {
      x.row(i) = (outlier_norm / u.norm()) * u.transpose();
      out.replaced[static_cast<std::size_t>(i)] = true;
      ++out.outliers;
    }
  }
  out.samples = std::move(x);
  return out;
}

void append_hex(std::ostringstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%a,", v);
  os << buf;
}

std::string describe(const char* kind, const Vector& mu0, const Matrix& shape,
                     std::initializer_list<double> extra) {
  std::ostringstream os;
  os << kind << "(d=" << mu0.size() << ";mu=";
  for (Eigen::Index i = 0; i < mu0.size(); ++i) append_hex(os, mu0(i));
  os << ";shape=";
  for (Eigen::Index i = 0; i < shape.size(); ++i) append_hex(os, shape.data()[i]);
  os << ";extra=";
  for (double e : extra) append_hex(os, e);
  os << ")";
  return os.str();
}

// Symmetric square roots, keyed by model id.
const Matrix& cached_root(const std::string& id, const SymMat& shape, const char* who) {
  static std::mutex mu;
  static std::map<std::string, Matrix> roots;
  std::lock_guard<std::mutex> lock(mu);
  auto it = roots.find(id);
  if (it == roots.end()) it = roots.emplace(id, psd_sqrt(shape, who)).first;
  return it->second;
}

const Model& target_of(const Model& model) {
  return model.kind() == ModelKind::Contaminated ? *model.base() : model;
}

std::vector<long> group_sizes(long n) {
  std::vector<long> sizes(kJackknifeGroups, n / kJackknifeGroups);
  for (long g = 0; g < n % kJackknifeGroups; ++g) ++sizes[static_cast<std::size_t>(g)];
  return sizes;
}

}  // namespace

Samples sample_gaussian(const Vector& mu0, const SymMat& sigma0, long m, std::uint64_t seed) {
  check_draw_args(mu0, sigma0, m, "sample_gaussian");
  return gaussian_rows(mu0, psd_sqrt(sigma0, "sample_gaussian"), m, seed);
}

Samples sample_student_t(const Vector& mu0, const SymMat& scale, double nu, long m,
                         std::uint64_t seed) {
  if (!std::isfinite(nu) || nu <= 4.0) {
    throw InvalidArgument(
        "sample_student_t: nu must exceed 4 so that E||X - mu0||^4 is finite");
  }
  check_draw_args(mu0, scale, m, "sample_student_t");
  return student_rows(mu0, psd_sqrt(scale, "sample_student_t"), nu, m, seed);
}

ContaminatedSamples sample_contaminated(const Model& base, double eps, double outlier_norm,
                                        long m, std::uint64_t seed) {
  return contaminate(base.draw(m, seed), eps, outlier_norm, seed);
}

Model Model::gaussian(Vector mu0, SymMat sigma0) {
  check_draw_args(mu0, sigma0, 0, "Model::gaussian");
  Model out;
  out.kind_ = ModelKind::Gaussian;
  out.id_ = describe("gaussian", mu0, sigma0.matrix(), {});
  psd_sqrt(sigma0, "Model::gaussian");
  out.mu0_ = std::move(mu0);
  out.shape_ = std::move(sigma0);
  return out;
}

Model Model::student_t(Vector mu0, SymMat scale, double nu) {
  if (!std::isfinite(nu) || nu <= 4.0) {
    throw InvalidArgument("Model::student_t: nu must exceed 4 so that E||X - mu0||^4 is finite");
  }
  check_draw_args(mu0, scale, 0, "Model::student_t");
  psd_sqrt(scale, "Model::student_t");
  Model out;
  out.kind_ = ModelKind::StudentT;
  out.id_ = describe("student_t", mu0, scale.matrix(), {nu});
  out.mu0_ = std::move(mu0);
  out.shape_ = std::move(scale);
  out.nu_ = nu;
  return out;
}

Model Model::two_point(Vector mu0, Vector v) {
  if (mu0.size() != v.size()) throw InvalidArgument("Model::two_point: dimension mismatch");
  if (!mu0.allFinite() || !v.allFinite()) {
    throw InvalidArgument("Model::two_point: parameters must be finite");
  }
  Model out;
  out.kind_ = ModelKind::TwoPoint;
  out.shape_ = SymMat::outer(v);
  out.id_ = describe("two_point", mu0, v, {});
  out.mu0_ = std::move(mu0);
  out.direction_ = std::move(v);
  return out;
}

Model Model::contaminated(const Model& base, double eps, double outlier_norm) {
  if (base.kind() == ModelKind::Contaminated) {
    throw InvalidArgument("Model::contaminated: base must not itself be contaminated");
  }
  if (!std::isfinite(eps) || eps < 0.0 || eps >= 0.5) {
    throw InvalidArgument("Model::contaminated: eps must lie in [0, 0.5)");
  }
  if (!std::isfinite(outlier_norm) || outlier_norm < 0.0) {
    throw InvalidArgument("Model::contaminated: outlier_norm must be finite and nonnegative");
  }
  Model out;
  out.kind_ = ModelKind::Contaminated;
  out.mu0_ = base.mu0_;
  out.shape_ = base.shape_;
  out.eps_ = eps;
  out.outlier_norm_ = outlier_norm;
  out.base_ = std::make_shared<const Model>(base);
  std::ostringstream os;
  os << "contaminated(" << base.id() << ";";
  append_hex(os, eps);
  append_hex(os, outlier_norm);
  os << ")";
  out.id_ = os.str();
  return out;
}

SymMat Model::covariance() const {
  switch (kind_) {
    case ModelKind::StudentT:
      return shape_ * (nu_ / (nu_ - 2.0));
    case ModelKind::Contaminated:
      return base_->covariance();
    case ModelKind::Gaussian:
    case ModelKind::TwoPoint:
      break;
  }
  return shape_;
}

Samples Model::draw(long m, std::uint64_t seed) const {
  if (m < 0) throw InvalidArgument("Model::draw: m must be nonnegative");
  switch (kind_) {
    case ModelKind::Gaussian:
      return gaussian_rows(mu0_, cached_root(id_, shape_, "Model::draw"), m, seed);
    case ModelKind::StudentT:
      return student_rows(mu0_, cached_root(id_, shape_, "Model::draw"), nu_, m, seed);
    case ModelKind::TwoPoint:
      return two_point_rows(mu0_, direction_, m, seed);
    case ModelKind::Contaminated:
      return contaminate(base_->draw(m, seed), eps_, outlier_norm_, seed).samples;
  }
  return {};
}

McEstimate matrix_variance_mc(const Model& model, long n, std::uint64_t seed) {
  if (n < kMinMcSamples) throw InvalidArgument("matrix_variance_mc: N must be at least 1e4");
  const Model& target = target_of(model);
  const Eigen::Index d = target.dim();
  const std::vector<long> sizes = group_sizes(n);

  std::vector<Matrix> group_sums;
  group_sums.reserve(sizes.size());
  Matrix total = Matrix::Zero(d, d);
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    Matrix z = target.draw(sizes[g], derive_seed(seed, {g}));
    z.rowwise() -= target.mean().transpose();
    const Vector w = z.rowwise().squaredNorm();
    const Matrix weighted = z.array().colwise() * w.array();
    group_sums.push_back(z.transpose() * weighted);
    total += group_sums.back();
  }

  const auto norm_of = [](const Matrix& s, double count) {
    return op_norm(SymMat(0.5 * (s + s.transpose()) / count));
  };
  McEstimate out;
  out.value = norm_of(total, static_cast<double>(n));

  const double groups = static_cast<double>(sizes.size());
  std::vector<double> leave_out;
  leave_out.reserve(sizes.size());
  double mean = 0.0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    leave_out.push_back(norm_of(total - group_sums[g], static_cast<double>(n - sizes[g])));
    mean += leave_out.back();
  }
  mean /= groups;
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt((groups - 1.0) / groups * ss);
  return out;
}

DirectionalMoments directional_moments_mc(const Model& model, long n, int n_random,
                                          std::uint64_t seed) {
  if (n < kMinMcSamples) throw InvalidArgument("directional_moments_mc: N must be at least 1e4");
  if (n_random < 100) {
    throw InvalidArgument("directional_moments_mc: need at least 100 random directions");
  }
  const Model& target = target_of(model);
  const Eigen::Index d = target.dim();

  Matrix dirs(d, n_random + 2 * d);
  Rng rng = make_rng(derive_seed(seed, {kDirectionStream}));
  std::normal_distribution<double> normal;
  for (int c = 0; c < n_random; ++c) {
    Vector v(d);
    do {
      for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
    } while (v.norm() == 0.0);
    dirs.col(c) = v.normalized();
  }
  dirs.middleCols(n_random, d) = sym_eigen(target.covariance()).vectors;
  dirs.rightCols(d) = Matrix::Identity(d, d);

  Vector s2 = Vector::Zero(dirs.cols());
  Vector s4 = Vector::Zero(dirs.cols());
  const std::vector<long> sizes = group_sizes(n);
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    Matrix z = target.draw(sizes[g], derive_seed(seed, {g}));
    z.rowwise() -= target.mean().transpose();
    const Matrix p = z * dirs;
    s2 += p.array().square().colwise().sum().matrix().transpose();
    s4 += p.array().square().square().colwise().sum().matrix().transpose();
  }
  s2 /= static_cast<double>(n);
  s4 /= static_cast<double>(n);

  DirectionalMoments out;
  out.directions = static_cast<int>(dirs.cols());
  out.fourth_moment_b = s4.maxCoeff();
  const double floor = 1e-12 * s2.maxCoeff();
  for (Eigen::Index c = 0; c < dirs.cols(); ++c) {
    if (s2(c) > floor) out.kurtosis_r = std::max(out.kurtosis_r, std::sqrt(s4(c)) / s2(c));
  }
  return out;
}

double kurtosis_bound_mc(const Model& model, long n, int n_random, std::uint64_t seed) {
  return directional_moments_mc(model, n, n_random, seed).kurtosis_r;
}

double GroundTruth::sigma() const { return std::sqrt(sigma0_sq); }

std::vector<std::string> GroundTruth::violations(double n_se) const {
  std::vector<std::string> out;
  const double slack = n_se * sigma0_sq_se;
  const EigenDecomp e = sym_eigen(sigma0);
  const double norm = sigma0.dim() == 0 ? 0.0 : e.values.cwiseAbs().maxCoeff();
  const double tr = trace(sigma0);
  const double d = static_cast<double>(sigma0.dim());
  if (sigma0.dim() > 0 && e.values(sigma0.dim() - 1) < -kPsdTol * norm) {
    out.emplace_back("sigma0 is not positive semi-definite");
  }
  if (sigma0_sq < tr * norm - slack) out.emplace_back("sigma0_sq >= tr(Sigma0) ||Sigma0||");
  if (sigma0_sq > kurtosis_r * kurtosis_r * eff_rank * norm * norm + slack) {
    out.emplace_back("sigma0_sq <= R^2 r(Sigma0) ||Sigma0||^2");
  }
  if (fourth_moment_b * d < sigma0_sq - slack) out.emplace_back("B d >= sigma0_sq");
  if (norm > 0.0 && dbar < 1.0 - slack / (norm * norm)) out.emplace_back("dbar >= 1");
  return out;
}

GroundTruth compute_ground_truth(const Model& model, const GroundTruthOptions& opts) {
  const Model& target = target_of(model);
  GroundTruth gt;
  gt.mu0 = target.mean();
  gt.sigma0 = target.covariance();
  const McEstimate var = matrix_variance_mc(target, opts.n, opts.seed);
  gt.sigma0_sq = var.value;
  gt.sigma0_sq_se = var.std_error;
  const DirectionalMoments dm =
      directional_moments_mc(target, opts.n, opts.directions, opts.seed);
  gt.kurtosis_r = dm.kurtosis_r;
  gt.fourth_moment_b = dm.fourth_moment_b;
  const double norm = op_norm(gt.sigma0);
  if (norm > 0.0) {
    gt.eff_rank = effective_rank(gt.sigma0);
    gt.dbar = gt.sigma0_sq / (norm * norm);
  }
  return gt;
}

GroundTruth ground_truth(const Model& model, const GroundTruthOptions& opts) {
  static std::mutex mu;
  static std::map<std::string, GroundTruth> cache;
  std::ostringstream key;
  key << target_of(model).id() << "|" << opts.n << "|" << opts.directions << "|" << opts.seed;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
  }
  GroundTruth gt = compute_ground_truth(model, opts);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key.str(), std::move(gt)).first->second;
}

}  // namespace heavycov
