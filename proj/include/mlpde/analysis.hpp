#pragma once

#include "mlpde/mlp_core.hpp"
#include "mlpde/problem.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlpde {

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-slot error weights: slot 0 weighs 1, gradient slots weigh
/// sqrt(horizon - t0).
struct ErrorWeighting {
    std::vector<double> weights;

    [[nodiscard]] static ErrorWeighting for_gap(int d, double gap);
};

/// Which reference the experiment errors are measured against.
struct ReferenceSpec {
    enum class Kind { kMlp, kOracle, kExact };

    Kind kind = Kind::kMlp;
    int n_ref = 6;
    int m_ref = 6;

    /// Parses "mlp(n,m)", "oracle", or "exact".
    [[nodiscard]] static ReferenceSpec parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

/// Full description of one experiment run.  Defaults reproduce the
/// 100-dimensional sin-mean convergence table.
struct RunConfig {
    std::string problem_label = "sin_mean";
    int d = 100;
    double T = 1.0;
    double t0 = 0.0;
    std::vector<double> x0;  // empty = origin
    int n_max = 7;
    bool fixed_base = false;
    int m_fixed = 2;
    ReferenceSpec reference;
    int repetitions = 10;
    double p = 2.0;
    std::uint64_t seed = 1;
    std::string output_path = "experiment.csv";

    /// Hard error (ConfigError) on out-of-range fields.
    void validate() const;

    /// Reads `key = value` lines; '#' starts a comment.  Unknown keys are a
    /// ConfigError.
    [[nodiscard]] static RunConfig from_file(const std::string& path);

    /// Applies one key/value override (same keys as the config file).
    void apply_override(const std::string& key, const std::string& value);
};

/// One depth row of an experiment.
struct ReportRow {
    int n = 0;
    int m = 0;
    double estimate = 0.0;                 // mean value slot over replicates
    double error = 0.0;                    // weighted value-slot L^p error
    std::vector<double> slot_errors;       // weighted L^p error per slot
    double sup_error = 0.0;                // max over slots
    std::vector<double> replicate_values;  // value slot of each replicate
    double runtime_seconds = 0.0;
    std::uint64_t rv_count = 0;            // per replicate
};

struct ExperimentReport {
    RunConfig config;
    EstimateVector reference;
    std::vector<ReportRow> rows;
};

/// Weighted per-slot L^p error of the estimates against the reference:
/// weight_s * (mean_r |e_rs - ref_s|^p)^(1/p).
[[nodiscard]] std::vector<double> lp_error(const std::vector<EstimateVector>& estimates,
                                           const EstimateVector& reference,
                                           double p,
                                           const ErrorWeighting& weighting);

enum class RateAxis { kRvCount, kRuntime };

/// Least-squares slope of log(error) against log(axis) over the report rows.
/// Rows with non-positive error or axis are skipped with a note on stderr;
/// fewer than 3 usable rows is a hard error.
[[nodiscard]] double fit_rate(const ExperimentReport& report, RateAxis axis);

/// Runs the configured experiment: one batch of replicates per depth
/// n = 1..n_max, errors against the configured reference.
[[nodiscard]] ExperimentReport run_experiment(const RunConfig& config);

/// Writes the CSV table (header n,m,estimate,error,RT,RV), the log-log
/// plot-data file (suffix "-plot.txt", with x^(-1/2) and x^(-1/4) guide
/// columns for both the count and runtime axes), and the run-metadata file
/// (suffix "-meta.txt") next to output_path.
void emit_outputs(const ExperimentReport& report, const std::string& output_path);

/// Parses a CSV written by emit_outputs back into rows (slot detail absent).
[[nodiscard]] std::vector<ReportRow> read_report_csv(const std::string& path);

}  // namespace mlpde
