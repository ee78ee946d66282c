#pragma once

#include "fbs/harness.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fbs::harness {

struct ReplicateRecord {
    std::size_t index = 0;
    bool failed = false;
    std::string error;
    std::vector<double> ols;
    std::vector<double> two_step;
};

struct ExperimentResult {
    ExperimentConfig config;
    SummaryTable summary;  // empty when fewer than two replicates succeeded
    std::vector<ReplicateRecord> raw;  // in replicate order
    std::size_t failures = 0;

    /// Successful estimates of one method, replicate x axis.
    std::vector<std::vector<double>> estimates(estimator::Method method) const;
};

struct RunOptions {
    std::size_t threads = 1;
    /// Called before each replicate is estimated; throwing fbs::Error marks it failed.
    std::function<void(std::size_t replicate)> fault_hook;
};

inline constexpr double kMaxFailureFraction = 0.05;

/// Replicates 2p and 2p+1 are the real and imaginary parts of one FFT drawn
/// from stream substream_key(seed, p). Output does not depend on `threads`.
/// Throws Error(TooManyFailures) when more than 5% of replicates fail.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

void write_raw_csv(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace fbs::harness
