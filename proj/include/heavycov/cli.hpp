#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "heavycov/matcore.hpp"
#include "heavycov/simlab.hpp"

namespace heavycov::cli {

/// Process exit codes. Every failure maps to exactly one of these.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kInfeasible = 3,
  kDegenerate = 4,
  kNumericFailure = 5,
};

using Json = nlohmann::ordered_json;

/// Comma-separated numeric table, one observation per row. A first row with
/// any non-numeric field is taken as a header. Throws InputError naming the
/// first offending line (1-based, counting the header).
Samples read_csv(const std::string& path);
Samples parse_csv(std::istream& in);

struct EstimateRequest {
  std::string input;
  std::optional<double> beta;
  std::optional<double> sigma_min;
  std::optional<double> sigma_max;
  std::optional<double> tau;
  std::optional<int> k;
  /// Empty writes to stdout.
  std::string output;
  std::uint64_t seed = 0;
};

/// Fills unset fields of `req` from a flat `key = value` file with keys
/// input, beta, sigma_min, sigma_max, tau, k, seed, out.
EstimateRequest merge_request_config(const std::string& path, EstimateRequest req);

struct BenchRequest {
  std::string config;
  std::string output;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  bool timings = false;
  int threads = 0;
};

int cmd_estimate(const EstimateRequest& req, std::ostream& err);
/// cmd_estimate plus robust PCA of rank req.k.
int cmd_pca(const EstimateRequest& req, std::ostream& err);
int cmd_bench(const BenchRequest& req, std::ostream& err);

/// Dispatches `estimate`, `pca` and `bench` subcommands.
int run(int argc, char** argv);

Json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const Json& j);
Json bench_report_json(const BenchReport& report, bool timings);

/// Sigma bounds used when the caller gives none, from the sample covariance
/// S: sigma_min = sqrt(tr(S) ||S||) / 8 and sigma_max = 8 sqrt(m) ||S||.
std::pair<double, double> heuristic_sigma_bounds(const Samples& samples);

}  // namespace heavycov::cli
