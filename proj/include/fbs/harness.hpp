#pragma once

#include "fbs/core.hpp"
#include "fbs/estimator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbs::harness {

/// One Monte Carlo experiment. Parsed from a JSON object whose keys are the
/// snake_case field names below; unknown keys are rejected.
struct ExperimentConfig {
    std::size_t dimension = 0;
    std::vector<double> hurst;
    Shape dims;  // samples per axis of the synthesized sheet
    std::size_t replicates = 1;
    std::uint64_t seed = 0;
    int wavelet_order = 3;
    std::optional<OctaveVector> octave_low;   // default 3 per axis
    std::optional<OctaveVector> octave_high;  // default: coarsest with an available coefficient
    std::vector<estimator::Method> estimators{estimator::Method::Ols, estimator::Method::TwoStep};
    int cascade_depth = 10;
    int lag_cap = 64;
    std::string summary_path;
    std::string raw_path;

    bool wants(estimator::Method m) const;

    /// Throws Error(Config) describing the first problem found.
    void validate() const;

    /// The octave box this experiment regresses over.
    std::vector<OctaveVector> octaves() const;

    static ExperimentConfig parse(std::string_view json_text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string to_json() const;
};

/// Desk-scale presets: "2d" (H=(0.8,0.8), 256^2, 100 replicates) and
/// "3d" (H=(0.6,0.7,0.8), 64^3, 50 replicates, octaves 2..3).
ExperimentConfig preset(std::string_view name);

struct SummaryRow {
    estimator::Method method = estimator::Method::Ols;
    std::size_t axis = 0;
    double truth = 0.0;
    double mean = 0.0;
    double std = 0.0;   // sample standard deviation, R-1 divisor
    double rmse = 0.0;  // sqrt(mean((H_hat - H)^2))
    std::size_t replicates = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
    std::size_t failures = 0;

    const SummaryRow& at(estimator::Method method, std::size_t axis) const;
    bool has(estimator::Method method) const;
};

/// Column statistics of a replicate x axis matrix. Needs at least two rows.
SummaryTable summarize(const std::vector<std::vector<double>>& estimates, const std::vector<double>& truth,
                       estimator::Method method = estimator::Method::Ols);

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path);

/// CSV of the log-scale diagram: j_1..j_d, log2_S, fitted, residual, n_J.
void logscale_export(const estimator::RegressionSystem& system, const estimator::EstimatorReport& report,
                     const std::filesystem::path& path);

/// JSON rendering of one or more reports on the same system.
std::string report_json(const estimator::RegressionSystem& system,
                        const std::vector<estimator::EstimatorReport>& reports, int wavelet_order);

}  // namespace fbs::harness
