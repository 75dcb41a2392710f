#pragma once

// Experiment runner behind the srgp_bench CLI: config parsing, single runs,
// comparison suites, and the dense-oracle bound check.
//
// metrics.csv column order (fixed):
//   batch,n_so_far,rmse,retained_rank,factor_error,clamped_variances,coefficients,seconds
// Coefficients are ';'-joined. Every column except seconds is deterministic
// for a fixed config, so seconds is kept last.

#include <srgp/data.hpp>
#include <srgp/gp.hpp>
#include <srgp/hyperopt.hpp>
#include <srgp/rla.hpp>
#include <srgp/stream.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace srgp::bench {

using Json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

struct DatasetConfig {
    /// abalone | sarcos | csv | smooth (in-memory synthetic, no file).
    std::string format = "abalone";
    std::string path;
    /// Generate a format-compatible surrogate instead of reading `path`.
    bool synthetic = false;
    Index rows = 4177;
    std::uint64_t seed = 0;
    /// Feature count for the smooth generator.
    Index dims = 3;
    bool standardize = true;
    /// Target column for format csv.
    int target_column = -1;
};

struct KernelConfig {
    /// se | poly
    std::string family = "se";
    double lengthscale = 4.0;
    double signal_variance = 1.0;
    /// Poly coefficients; empty selects default_coefficients() on the first batch.
    std::vector<double> coefficients;
    int m = 3;
    double noise_variance = 0.3;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetConfig dataset;
    data::StreamPlan stream;
    gp::Engine engine = gp::Engine::SRMF;
    KernelConfig kernel;
    /// Unset runs the plain kernel engine; set requires the poly kernel.
    std::optional<hyperopt::Mode> mode;
    hyperopt::OptConfig opt;
    rla::SketchParams sketch;
    /// Dense factor error per batch (kernel runs only, untimed).
    bool factor_oracle = false;
    bool write_trace = false;
    std::string output_dir = "out";
    int repeats = 1;
    /// Default for the sketch, optimizer and dataset seeds when they are not given.
    std::uint64_t seed = 0;

    void validate() const;
};

/// Fill unspecified max_samples with the dataset default (Abalone 4000, SARCOS 10000).
Index default_max_samples(const std::string& format);

ExperimentConfig parse_config(const Json& j);
Json to_json(const ExperimentConfig& config);
Json load_json(const std::filesystem::path& path);

/// Apply "dotted.key=value" to a config document. The value is parsed as JSON
/// when possible and kept as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

std::vector<Batch> load_stream(const ExperimentConfig& config);

struct ExperimentResult {
    ExperimentConfig config;
    StreamMetrics metrics;
    std::vector<double> final_coefficients;
    int optimizer_warnings = 0;
    std::vector<hyperopt::TraceRow> trace;
};

/// Runs the stream `repeats` times and reports the median seconds per batch.
/// Non-timing columns must agree across repeats (they are deterministic).
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<Batch>& stream);

std::string metrics_csv(const StreamMetrics& metrics);
Json summary_json(const ExperimentResult& result);
/// metrics.csv, summary.json, plots/{time,rmse}_per_batch.svg (and trace.csv when enabled).
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Least-squares slope of log(seconds) against log(n_so_far) over the batches
/// with index >= from_batch.
double fit_exponent(const StreamMetrics& metrics, Index from_batch);

struct SuiteRow {
    std::string name;
    std::string engine;
    std::string mode;
    Index batches = 0;
    double mean_rmse = 0.0;
    double mean_seconds = 0.0;
    double total_seconds = 0.0;
    double time_exponent = 0.0;
};

struct SuiteResult {
    std::vector<ExperimentResult> runs;
    std::vector<SuiteRow> rows;
};

/// Suite document: {"base": {...}, "experiments": [{"name": ..., patch...}, ...]}.
/// Each experiment is the base merged with its patch (RFC 7386).
std::vector<ExperimentConfig> expand_suite(const Json& suite);
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs);
/// comparison.csv, comparison.json, plots/{time,rmse}_per_batch.svg and one subdirectory per run.
void write_suite(const SuiteResult& suite, const std::filesystem::path& dir);

struct BoundsConfig {
    int seeds = 20;
    std::uint64_t first_seed = 1;
    int batches = 10;
    Index batch_size = 50;
    Index dims = 3;
    rla::SketchParams sketch;
    double lengthscale = 1.0;
    double signal_variance = 1.0;
};

struct BoundsRow {
    std::uint64_t seed = 0;
    Index batch = 0;
    Index n = 0;
    double error = 0.0;
    double bound = 0.0;
};

struct BoundsReport {
    std::vector<BoundsRow> rows;
    int runs = 0;
    /// Runs with at least one batch whose error exceeded the bound.
    int violating_runs = 0;
    double max_ratio = 0.0;

    double pass_fraction() const { return runs ? 1.0 - static_cast<double>(violating_runs) / runs : 0.0; }
};

/// Sequential factorization of an SE kernel stream (randomized initial factor,
/// then bordered updates) against the dense kernel, checking after every batch
///   ||K_t - U S U^T||_2 <= 2 sum_{j<=t} (1 + 9 sqrt((k+p) n_j)) sigma_{k+1}(K_j).
BoundsReport verify_bounds(const BoundsConfig& config);
void write_bounds(const BoundsReport& report, const std::filesystem::path& dir);

}  // namespace srgp::bench
