#pragma once

#include "fbs/core.hpp"
#include "fbs/estimator.hpp"
#include "fbs/wavelet.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace fbs::covmodel {

/// Quadrature and truncation settings plus the octave layout G(H) is built for.
///
/// lag_cap bounds the translation offset between two coefficients measured
/// in units of the coarser of their two scales; pairs further apart are
/// treated as uncorrelated.
struct CovModelConfig {
    int cascade_depth = 10;
    int lag_cap = 64;
    std::vector<OctaveVector> octaves;
    std::vector<std::vector<std::size_t>> counts;  // n_i per octave and axis

    /// Replaces the quadrature model entirely when set (used to pin G in tests).
    std::function<Eigen::MatrixXd(const HurstVector&)> g_override;

    void validate(const wavelet::WaveletFilter& filter) const;

    static CovModelConfig for_system(const estimator::RegressionSystem& system);
};

/// Model covariance of the log-variance vector, G(H).
///
/// Per-axis wavelet cross-covariances
///   c(j,k; j',k') = int int psi_{j,k}(t) psi_{j',k'}(s) (-|t-s|^{2h}/2) dt ds
/// are reduced by self-similarity to a profile over the fine-scale offset
/// e = k - 2^{j'-j} k' for each octave gap j'-j, and each profile is a
/// rectangle-rule sum over the dyadic cascade grid. Profiles are memoized by
/// (h rounded to 1e-6, gap). All members are safe for concurrent use.
class CovarianceModel {
public:
    CovarianceModel(const wavelet::WaveletFilter& filter, CovModelConfig config);
    ~CovarianceModel();

    const CovModelConfig& config() const noexcept { return config_; }
    const wavelet::WaveletFilter& filter() const noexcept { return filter_; }

    /// One-axis cross-covariance of two wavelet coefficients of fBm with index h.
    double kernel_cross_cov_1d(double h, int j, long long k, int j2, long long k2) const;

    /// Cov(log2 S(J_h), log2 S(J_l)) for coefficient grids with the given per-axis counts.
    double variance_of_log_S(const HurstVector& hurst, const OctaveVector& octave_h, const OctaveVector& octave_l,
                             std::span<const std::size_t> counts_h, std::span<const std::size_t> counts_l) const;

    /// Symmetric positive definite m x m matrix over config().octaves.
    /// Throws Error(ModelDegenerate) if repairing definiteness would clip
    /// more than 1% of the eigenvalue mass.
    Eigen::MatrixXd g_matrix(const HurstVector& hurst) const;

    std::size_t cached_profiles() const;

private:
    struct Profile;
    struct Correlation;

    std::shared_ptr<const Profile> profile(double h, int gap) const;
    std::shared_ptr<const Correlation> correlation(int gap) const;
    std::shared_ptr<const wavelet::CascadeTable> cascade(int depth) const;
    double axis_factor(double h, int j_a, int j_b, std::size_t n_a, std::size_t n_b) const;

    wavelet::WaveletFilter filter_;
    CovModelConfig config_;

    mutable std::mutex mutex_;
    mutable std::map<int, std::shared_ptr<const wavelet::CascadeTable>> cascades_;
    mutable std::map<int, std::shared_ptr<const Correlation>> correlations_;
    mutable std::map<std::pair<long long, int>, std::shared_ptr<const Profile>> profiles_;
};

/// Symmetrize, then lift eigenvalues below 1e-12 * max up to that floor.
Eigen::MatrixXd repair_positive_definite(const Eigen::MatrixXd& g);

struct TwoStepResult {
    estimator::EstimatorReport ols;
    estimator::EstimatorReport two_step;
    Eigen::MatrixXd g;  // G evaluated at the (projected) OLS estimate
};

inline constexpr double kProjectLow = 0.01;
inline constexpr double kProjectHigh = 0.99;

/// OLS pilot, then one weighted refit with G(H_o). H_o is projected into
/// [0.01, 0.99] only for evaluating G; the reported OLS estimate is untouched.
/// The OLS report's covariance is the sandwich with Sigma_L = G.
TwoStepResult two_step_fit(const estimator::RegressionSystem& system, const CovarianceModel& model);

}  // namespace fbs::covmodel
