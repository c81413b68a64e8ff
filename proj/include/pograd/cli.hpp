#ifndef POGRAD_CLI_HPP
#define POGRAD_CLI_HPP

#include "pograd/baselines.hpp"
#include "pograd/dataset.hpp"
#include "pograd/decode.hpp"
#include "pograd/metrics.hpp"
#include "pograd/model.hpp"
#include "pograd/samplers.hpp"
#include "pograd/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pograd {

inline constexpr const char* kDrawsSchema = "pograd-draws-1";
inline constexpr const char* kFitSummarySchema = "pograd-fit-summary-1";
inline constexpr const char* kEstimateSchema = "pograd-estimate-1";
inline constexpr const char* kClosureSchema = "pograd-closure-1";
inline constexpr const char* kMetricsSchema = "pograd-metrics-1";
inline constexpr const char* kCompareSchema = "pograd-compare-1";
inline constexpr const char* kConfigSchema = "pograd-config-1";

enum class Method { kHardMcmc, kRelaxedHmc, kFullrankVi, kMajority, kSoftdag };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // ConfigError
inline bool is_bayesian(Method m) { return m == Method::kHardMcmc || m == Method::kRelaxedHmc || m == Method::kFullrankVi; }

struct RunConfig {
  Method method = Method::kRelaxedHmc;
  std::uint64_t seed = 1;
  double zeta = 0.5;
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> dataset;    // default out_dir/dataset.json
  std::optional<std::filesystem::path> reference;  // hard-MCMC draws for eval
  PriorConfig prior;
  HmcConfig hmc;
  MhConfig mh;
  AdviConfig advi;
  SynthConfig synth;
  SoftDagConfig softdag;
  double majority_theta = 0.5;
  // Empty grids fit SoftDAG at softdag.lambda_l1 / lambda_h only.
  std::vector<double> softdag_l1_grid{1e-4, 1e-3, 1e-2};
  std::vector<double> softdag_h_grid{1.0, 10.0, 100.0};

  std::filesystem::path dataset_path() const { return dataset ? *dataset : out_dir / "dataset.json"; }
  // Copies seed into every sub-config and checks them. ConfigError.
  void finalize();
};

// Keys left out keep their defaults; unknown keys are a ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Draws as JSON lines: a header object, then one record per draw with the
// row-major Z, rho, beta, gamma and the log target density.
std::string draws_to_jsonl(const DrawSet& draws);
DrawSet draws_from_jsonl(const std::string& text);
DrawSet load_draws(const std::filesystem::path& path);

// A method's posterior summary: averaged draw closures, or the 0/1 closure
// of a point estimate.
ClosureProbabilities load_closure_probabilities(const std::filesystem::path& path);

// Shortest round-trip decimal form.
std::string format_double(double v);

struct CompareResult {
  double mae = 0.0;
  double correlation = 0.0;  // Pearson, off-diagonal entries; NaN if constant
};
CompareResult compare_closures(const ClosureProbabilities& a, const ClosureProbabilities& b);

// dataset.json
void cmd_generate(const RunConfig& cfg);
// draws.jsonl (Bayesian methods) or estimate.json (baselines), fit_summary.json
void cmd_fit(const RunConfig& cfg);
// p_hat.csv, closure.csv, hasse.csv, closure.json
void cmd_decode(const RunConfig& cfg);
// metrics.json and a row appended to metrics.csv
MetricsReport cmd_eval(const RunConfig& cfg);
// compare.json; prints the table to stdout
CompareResult cmd_compare(const RunConfig& cfg, const std::filesystem::path& a,
                          const std::filesystem::path& b);

// Column order of metrics.csv.
const std::vector<std::string>& metrics_csv_columns();

// Parses argv, runs the command and maps failures to exit codes: 0 success,
// 2 configuration, 3 data, 4 numerical, 1 anything else.
int run_cli(int argc, const char* const* argv);

}  // namespace pograd

#endif  // POGRAD_CLI_HPP
