#include "heavycov/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "heavycov/errors.hpp"
#include "heavycov/robust_cov.hpp"

namespace heavycov::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Json vector_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

template <typename T>
Json list_json(const std::vector<T>& v) {
  Json arr = Json::array();
  for (const T& x : v) arr.push_back(x);
  return arr;
}

Json quantiles_json(const Quantiles& q) {
  return Json{{"q10", q.q10}, {"median", q.median}, {"q90", q.q90}, {"max", q.max}};
}

Json bound_json(const BoundCheck& b) {
  return Json{{"radius", b.radius},
              {"violation_freq", b.violation_freq},
              {"budget", b.budget},
              {"applicable", b.applicable},
              {"within_budget", b.within_budget()}};
}

void write_report(const Json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing output file '" + path + "'");
}

struct Estimate {
  Samples samples;
  LepskiReport lepski;
  Json report;
};

void validate_request(const EstimateRequest& req) {
  if (!req.beta) throw InvalidArgument("--beta is required");
  if (!(*req.beta > 1.0) || !std::isfinite(*req.beta)) {
    throw InvalidArgument("--beta must be finite and > 1");
  }
  if (req.tau && !(*req.tau >= 0.0)) throw InvalidArgument("--tau must be nonnegative");
  if (req.sigma_min && !(*req.sigma_min > 0.0)) {
    throw InvalidArgument("--sigma-min must be positive");
  }
  if (req.sigma_max && !(*req.sigma_max > 0.0)) {
    throw InvalidArgument("--sigma-max must be positive");
  }
  if (req.sigma_min && req.sigma_max && *req.sigma_min > *req.sigma_max) {
    throw InvalidArgument("--sigma-min must not exceed --sigma-max");
  }
  if (req.k && *req.k < 1) throw InvalidArgument("--k must be at least 1");
}

Estimate run_estimate(const EstimateRequest& req) {
  validate_request(req);
  Estimate est;
  est.samples = read_csv(req.input);
  const long m = static_cast<long>(est.samples.rows());
  const Eigen::Index d = est.samples.cols();
  const double beta = *req.beta;
  if (req.k && *req.k > d) {
    throw InvalidArgument("--k = " + std::to_string(*req.k) + " exceeds the dimension d = " +
                          std::to_string(d));
  }
  const long min_m = mom_min_samples(beta);
  if (m < min_m) {
    std::ostringstream os;
    os << "beta = " << beta << " needs at least m = " << min_m << " rows, input has " << m;
    throw SampleSizeError(os.str(), min_m);
  }

  const auto [h_min, h_max] = heuristic_sigma_bounds(est.samples);
  double sigma_min = req.sigma_min.value_or(h_min);
  double sigma_max = req.sigma_max.value_or(std::max(h_max, sigma_min));
  if (!req.sigma_min && sigma_min > sigma_max) sigma_min = sigma_max;

  est.lepski = lepski_estimate(est.samples, LepskiConfig{sigma_min, sigma_max, beta});
  const LepskiReport& lep = est.lepski;

  Json distances = Json::array();
  for (const auto& row : lep.distances) distances.push_back(list_json(row));

  Json& r = est.report;
  r["command"] = "estimate";
  r["input"] = req.input;
  r["m"] = m;
  r["d"] = d;
  r["beta"] = beta;
  r["seed"] = req.seed;
  r["mean"] = Json{{"k_blocks", lep.mean.k}, {"mu_hat", vector_json(lep.mean.mu_hat)}};
  r["sigma_bounds"] = Json{{"sigma_min", sigma_min},
                           {"sigma_max", sigma_max},
                           {"sigma_min_source", req.sigma_min ? "user" : "heuristic"},
                           {"sigma_max_source", req.sigma_max ? "user" : "heuristic"}};
  r["grid"] = Json{{"sigmas", list_json(lep.sigmas)},
                   {"thetas", list_json(lep.thetas)},
                   {"distances", distances},
                   {"j_star", lep.j_star},
                   {"sigma_j_star", lep.sigmas[lep.j_star]},
                   {"theta_j_star", lep.thetas[lep.j_star]}};
  r["sigma_star"] = matrix_to_json(lep.sigma_star.matrix());
  if (req.tau) {
    const SymMat shrunk = soft_threshold(lep.sigma_star, *req.tau);
    r["tau"] = *req.tau;
    r["sigma_tau"] = matrix_to_json(shrunk.matrix());
    r["sigma_tau_eigenvalues"] = vector_json(sym_eigen(shrunk).values);
  } else {
    r["tau"] = nullptr;
    r["sigma_tau"] = nullptr;
    r["sigma_tau_eigenvalues"] = nullptr;
  }
  return est;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const SampleSizeError& e) {
    err << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const DegenerateSpectrumError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    err << "error: numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}

}  // namespace

Samples parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line);
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      const auto v = to_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (first) {
      first = false;
      width = fields.size();
      if (!numeric) continue;  // header
    }
    if (fields.size() != width) {
      std::ostringstream os;
      os << "csv line " << lineno << ": expected " << width << " fields, found "
         << fields.size();
      throw InputError(os.str());
    }
    if (!numeric) {
      std::ostringstream os;
      os << "csv line " << lineno << ": non-numeric field";
      throw InputError(os.str());
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError("csv: no data rows");
  Samples x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return x;
}

Samples read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return parse_csv(in);
}

EstimateRequest merge_request_config(const std::string& path, EstimateRequest req) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  const auto number = [&](const std::string& key, const std::string& value) {
    const auto v = to_double(value);
    if (!v) throw InputError("config: key '" + key + "' has non-numeric value '" + value + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "input") {
      if (req.input.empty()) req.input = value;
    } else if (key == "out") {
      if (req.output.empty()) req.output = value;
    } else if (key == "beta") {
      if (!req.beta) req.beta = number(key, value);
    } else if (key == "sigma_min") {
      if (!req.sigma_min) req.sigma_min = number(key, value);
    } else if (key == "sigma_max") {
      if (!req.sigma_max) req.sigma_max = number(key, value);
    } else if (key == "tau") {
      if (!req.tau) req.tau = number(key, value);
    } else if (key == "k") {
      const double k = number(key, value);
      if (k != std::floor(k)) throw InputError("config: key 'k' must be an integer");
      if (!req.k) req.k = static_cast<int>(k);
    } else if (key == "seed") {
      const double s = number(key, value);
      if (s < 0 || s != std::floor(s)) throw InputError("config: key 'seed' must be a nonnegative integer");
      if (req.seed == 0) req.seed = static_cast<std::uint64_t>(s);
    } else {
      throw InputError("config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
  }
  return req;
}

std::pair<double, double> heuristic_sigma_bounds(const Samples& samples) {
  const SymMat s = sample_covariance(samples);
  const double norm = op_norm(s);
  if (!(norm > 0.0)) return {1.0, 1.0};
  const double lo = std::sqrt(trace(s) * norm) / 8.0;
  const double hi = 8.0 * std::sqrt(static_cast<double>(samples.rows())) * norm;
  return {lo, std::max(lo, hi)};
}

Json matrix_to_json(const Matrix& a) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) data.push_back(a(i, j));
  }
  return Json{{"rows", a.rows()}, {"cols", a.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InputError("matrix: data length does not match rows * cols");
  }
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      a(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
    }
  }
  return a;
}

Json bench_report_json(const BenchReport& report, bool timings) {
  const BenchConfig& c = report.config;
  Json out;
  out["command"] = "bench";
  out["model"] = report.model_id;
  out["config"] = Json{{"model", c.model},
                       {"d", c.d},
                       {"nu", c.nu},
                       {"eps", c.eps},
                       {"outlier_norm", c.outlier_norm},
                       {"m_grid", list_json(c.m_grid)},
                       {"trials", c.trials},
                       {"beta", c.beta},
                       {"sigma_min_factor", c.sigma_min_factor},
                       {"sigma_max_factor", c.sigma_max_factor},
                       {"tau_rule", c.tau_rule},
                       {"seed", c.seed}};
  const GroundTruth& gt = report.truth;
  out["ground_truth"] = Json{{"mu0", vector_json(gt.mu0)},
                             {"sigma0", matrix_to_json(gt.sigma0.matrix())},
                             {"sigma0_sq", gt.sigma0_sq},
                             {"sigma0_sq_se", gt.sigma0_sq_se},
                             {"eff_rank", gt.eff_rank},
                             {"dbar", gt.dbar},
                             {"kurtosis_r_lower_bound", gt.kurtosis_r},
                             {"fourth_moment_b", gt.fourth_moment_b}};
  out["sigma_min"] = report.sigma_min;
  out["sigma_max"] = report.sigma_max;

  Json records = Json::array();
  for (const TrialRecord& r : report.records) {
    Json rec{{"m", r.m},
             {"trial", r.trial},
             {"seed", r.seed},
             {"op_err_star", r.op_err_star},
             {"op_err_sample", r.op_err_sample},
             {"op_err_fixed", r.op_err_fixed},
             {"fro_err_tau", r.fro_err_tau},
             {"tau", r.tau},
             {"j_star", r.j_star},
             {"sigma_j_star", r.sigma_j_star}};
    rec["seconds"] = timings ? Json(r.seconds) : Json(nullptr);
    records.push_back(std::move(rec));
  }
  out["records"] = std::move(records);

  Json levels = Json::array();
  for (const LevelSummary& lv : report.levels) {
    levels.push_back(Json{{"m", lv.m},
                          {"trials", lv.trials},
                          {"op_err_star", quantiles_json(lv.op_err_star)},
                          {"op_err_sample", quantiles_json(lv.op_err_sample)},
                          {"op_err_fixed", quantiles_json(lv.op_err_fixed)},
                          {"fro_err_tau", quantiles_json(lv.fro_err_tau)},
                          {"star_beats_sample", lv.star_beats_sample},
                          {"empirical_constant_star", lv.empirical_constant_star},
                          {"empirical_constant_fixed", lv.empirical_constant_fixed},
                          {"fixed_sigma_bound", bound_json(lv.fixed_sigma)},
                          {"lepski_bound", bound_json(lv.lepski)},
                          {"low_rank_frobenius_sq_bound", bound_json(lv.low_rank)}});
  }
  out["aggregates"] = std::move(levels);
  out["rate_slope"] = std::isfinite(report.rate_slope) ? Json(report.rate_slope) : Json(nullptr);
  return out;
}

int cmd_estimate(const EstimateRequest& req, std::ostream& err) {
  return guarded(err, [&] { write_report(run_estimate(req).report, req.output); });
}

int cmd_pca(const EstimateRequest& req, std::ostream& err) {
  return guarded(err, [&] {
    if (!req.k) throw InvalidArgument("pca requires --k");
    Estimate est = run_estimate(req);
    const LepskiReport& lep = est.lepski;
    const int k = *req.k;
    const Eigen::Index d = est.samples.cols();
    const PcaResult p = pca(lep.sigma_star, k);
    const double sigma_used = lep.sigmas[lep.j_star];
    const double rate = std::sqrt(*req.beta / static_cast<double>(est.samples.rows()));

    Json& r = est.report;
    r["command"] = "pca";
    Json radius{{"value", nullptr},
                {"sigma_used", sigma_used},
                {"label", "plug-in diagnostic, not a certified bound"}};
    if (k < d) radius["value"] = 36.0 * sigma_used * rate / p.gap;
    r["pca"] = Json{{"k", k},
                    {"eigenvalues", vector_json(p.values)},
                    {"eigenvectors", matrix_to_json(p.vectors)},
                    {"projector", matrix_to_json(p.projector.matrix())},
                    {"gap", k < d ? Json(p.gap) : Json(nullptr)},
                    {"gap_checked", k < d},
                    {"radius", radius}};
    write_report(r, req.output);
  });
}

int cmd_bench(const BenchRequest& req, std::ostream& err) {
  return guarded(err, [&] {
    BenchConfig cfg = load_bench_config(req.config);
    if (req.beta) cfg.beta = *req.beta;
    if (req.seed) cfg.seed = *req.seed;
    cfg.threads = req.threads;
    const BenchReport report = run_benchmark(cfg);
    write_report(bench_report_json(report, req.timings), req.output);
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Robust covariance estimation for heavy-tailed data"};
  app.require_subcommand(1);

  EstimateRequest est;
  std::string est_config;
  double beta = 0, smin = 0, smax = 0, tau = 0;
  int k = 0;
  const auto add_estimate_flags = [&](CLI::App* sub) {
    sub->add_option("input,--in", est.input, "CSV file, one observation per row");
    sub->add_option("--beta", beta, "Confidence parameter (> 1); beta = ln(1/delta)");
    sub->add_option("--sigma-min", smin, "Lower bound on sigma0");
    sub->add_option("--sigma-max", smax, "Upper bound on sigma0");
    sub->add_option("--tau", tau, "Eigenvalue soft-threshold level");
    sub->add_option("--k", k, "Number of principal components");
    sub->add_option("--seed", est.seed, "Seed echoed in the report");
    sub->add_option("--out", est.output, "Report path (default: stdout)");
    sub->add_option("--config", est_config, "key = value file; flags take precedence");
  };
  CLI::App* estimate = app.add_subcommand("estimate", "Lepski-adaptive robust covariance");
  add_estimate_flags(estimate);
  CLI::App* pca_cmd = app.add_subcommand("pca", "Robust PCA on the adaptive estimate");
  add_estimate_flags(pca_cmd);

  BenchRequest bench;
  double bench_beta = 0;
  std::uint64_t bench_seed = 0;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Monte Carlo benchmark harness");
  bench_cmd->add_option("--config", bench.config, "Benchmark configuration file")->required();
  bench_cmd->add_option("--out", bench.output, "Report path (default: stdout)");
  bench_cmd->add_option("--beta", bench_beta, "Override the config's beta");
  bench_cmd->add_option("--seed", bench_seed, "Override the config's seed");
  bench_cmd->add_flag("--timings", bench.timings, "Record wall-clock seconds per trial");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  if (*bench_cmd) {
    if (bench_cmd->count("--beta") > 0) bench.beta = bench_beta;
    if (bench_cmd->count("--seed") > 0) bench.seed = bench_seed;
    return cmd_bench(bench, std::cerr);
  }

  CLI::App* sub = *estimate ? estimate : pca_cmd;
  if (sub->count("--beta") > 0) est.beta = beta;
  if (sub->count("--sigma-min") > 0) est.sigma_min = smin;
  if (sub->count("--sigma-max") > 0) est.sigma_max = smax;
  if (sub->count("--tau") > 0) est.tau = tau;
  if (sub->count("--k") > 0) est.k = k;
  if (!est_config.empty()) {
    const int rc = guarded(std::cerr, [&] { est = merge_request_config(est_config, est); });
    if (rc != kOk) return rc;
  }
  if (est.input.empty()) {
    std::cerr << "error: an input CSV is required\n";
    return kInputError;
  }
  return sub == estimate ? cmd_estimate(est, std::cerr) : cmd_pca(est, std::cerr);
}

}  // namespace heavycov::cli
