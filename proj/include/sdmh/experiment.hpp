#pragma once

// Run configurations, experiment drivers and run summaries shared by the
// command-line tool and the tests.
//
// Configuration files are JSON objects. Unknown keys are rejected, relative
// paths are resolved against the directory of the configuration file, and
// every run directory receives config.resolved with all defaults written out.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdmh/conjlinear.hpp"
#include "sdmh/dirmult.hpp"
#include "sdmh/io.hpp"
#include "sdmh/linsampler.hpp"
#include "sdmh/rjmcmc.hpp"
#include "sdmh/synthgen.hpp"

namespace sdmh {

using Json = nlohmann::ordered_json;

struct DiagnosticsConfig {
  std::size_t acf_max_lag = 100;
  double fdr_alpha = 0.05;
  double pip_cutoff = 0.5;
};

struct GenConfig {
  enum class Kind { Linear, DM } kind = Kind::Linear;
  LinearSynthConfig linear{};
  DMSynthConfig dm{};

  static GenConfig from_json(const Json& j);
  Json to_json() const;
};

struct LinearRunConfig {
  std::filesystem::path x_path;  // empty when synthetic
  std::filesystem::path y_path;
  std::optional<LinearSynthConfig> synth;
  bool standardize = true;
  double prior_precision = 0.01;
  double a0 = 0.01;
  double b0 = 0.01;
  ModelPrior model_prior{};
  SamplerConfig sampler{};
  double graph_threshold = 0.5;
  std::filesystem::path graph_path;
  std::size_t replicates = 1;
  std::size_t sweep_iterations = 5000;
  std::size_t sweep_burn_in = 1000;
  DiagnosticsConfig diagnostics{};

  /// `base` resolves relative paths.
  static LinearRunConfig from_json(const Json& j, const std::filesystem::path& base);
  Json to_json() const;
};

struct DMRunConfig {
  std::filesystem::path counts_path;
  std::filesystem::path x_path;
  std::optional<DMSynthConfig> synth;
  bool standardize = true;
  double s2 = 10.0;
  double r2 = 10.0;
  RJConfig sampler{};
  std::filesystem::path graph_path;
  DiagnosticsConfig diagnostics{};

  static DMRunConfig from_json(const Json& j, const std::filesystem::path& base);
  Json to_json() const;
};

Json load_json_file(const std::filesystem::path& path);

/// FNV-1a 64 of the text, as 16 hex digits.
std::string config_hash(const std::string& text);

/// Prepares an output directory; throws ConfigError if it holds files and
/// `force` is false.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// Writes the generated dataset and truth.json.
void write_generated(const GenConfig& config, const std::filesystem::path& dir);

struct LinearDataset {
  MatrixXd x;
  VectorXd y;
  std::vector<std::string> names;
  std::optional<InclusionVector> truth;
};
LinearDataset load_linear_data(const LinearRunConfig& config);

struct DMDataset {
  DMData data;
  std::vector<std::string> predictor_names;
  std::vector<std::string> category_names;
  std::optional<DMSynth> truth;
};
DMDataset load_dm_data(const DMRunConfig& config);

LinearProblem make_linear_problem(const LinearRunConfig& config, const LinearDataset& data);

struct LinearRunOptions {
  bool exact = false;
  std::optional<std::vector<double>> sweep;
};

/// Runs and writes trace.csv, configs.bin, lambda.csv, pip.csv, hamming.csv,
/// acf.csv, summary.json (and exact.csv, sweep.csv when requested).
Json run_linear_experiment(const LinearRunConfig& config, const LinearRunOptions& options,
                           const std::filesystem::path& out);

/// Runs and writes trace.csv, configs.bin, coefficients.csv, lambda.csv,
/// pip.csv, selected.csv, acf.csv, summary.json.
Json run_dm_experiment(const DMRunConfig& config, const std::filesystem::path& out);

/// Linear summary from stored quantities only.
Json summarize_linear(const LinearTraceColumns& trace, const ConfigTrace& configs,
                      const Json& resolved, const std::vector<double>* exact,
                      const std::filesystem::path& out);

Json summarize_dm(const DMTraceColumns& trace, const ConfigTrace& configs, std::size_t predictors,
                  const Json& resolved, const std::filesystem::path& out);

/// Recomputes diagnostics of a run directory into `out`; returns the summary.
Json diagnose_run(const std::filesystem::path& run_dir, const std::filesystem::path& out,
                  std::optional<std::size_t> acf_max_lag);

/// "a:b:n" -> linspace(a, b, n).
std::vector<double> parse_sweep(const std::string& spec);

}  // namespace sdmh
