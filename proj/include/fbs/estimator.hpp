#pragma once

#include "fbs/core.hpp"
#include "fbs/wavelet.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fbs::estimator {

/// Log-scale regression L = A alpha + eps over m octave vectors.
/// Row l of the design is [j_{l,1}, ..., j_{l,d}, 1]; logvars holds log2 S(J_l).
struct RegressionSystem {
    std::vector<OctaveVector> octaves;
    Eigen::MatrixXd design;
    Eigen::VectorXd logvars;
    std::vector<std::vector<std::size_t>> axis_counts;  // n_i per octave

    std::size_t rank() const noexcept { return octaves.empty() ? 0 : octaves.front().size(); }
    std::size_t size() const noexcept { return octaves.size(); }
    std::size_t count(std::size_t row) const;  // n_J = prod n_i
};

/// Validating constructor: m >= d+1, full column rank, finite logvars.
RegressionSystem make_system(std::vector<OctaveVector> octaves, Eigen::VectorXd logvars,
                             std::vector<std::vector<std::size_t>> axis_counts);

/// Computes S(J) for each octave and assembles the regression.
RegressionSystem build_system(const Field& field, const wavelet::WaveletFilter& filter,
                              const std::vector<OctaveVector>& octaves);

enum class Method { Ols, Gls, TwoStep };

const char* to_string(Method method) noexcept;

struct EstimatorReport {
    Method method = Method::Ols;
    std::vector<double> hurst;
    double intercept = 0.0;  // estimate of log2 C
    Eigen::VectorXd alpha;
    /// Covariance of (H_1..H_d, intercept/2 - 1/2), without the 1/n scaling.
    Eigen::MatrixXd covariance;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    bool out_of_range = false;  // some H_i outside (0,1); reported, never clamped
};

/// Weighted least squares minimizing (L - A a)' W^{-1} (L - A a).
/// The covariance in the report treats W as the covariance of L.
EstimatorReport fit(const RegressionSystem& system, const Eigen::MatrixXd& weight, Method tag = Method::Gls);

/// Same estimate, but covariance from the sandwich formula with sigma_l.
EstimatorReport fit(const RegressionSystem& system, const Eigen::MatrixXd& weight, const Eigen::MatrixXd& sigma_l,
                    Method tag);

EstimatorReport fit_ols(const RegressionSystem& system);

/// 1/4 (A'W^-1 A)^-1 A'W^-1 S W^-1 A (A'W^-1 A)^-1 with S = sigma_l.
Eigen::MatrixXd asymptotic_covariance(const RegressionSystem& system, const Eigen::MatrixXd& sigma_l,
                                      const Eigen::MatrixXd& weight);

struct OctaveRange {
    OctaveVector low;
    OctaveVector high;
};

inline constexpr int kDefaultLowOctave = 3;
inline constexpr std::size_t kMinAvailable = 1;

/// low = 3 per axis; high = the coarsest octave that still leaves at least
/// min_count available coefficients on that axis.
OctaveRange default_octave_range(const Shape& dims, const wavelet::WaveletFilter& filter,
                                 int low = kDefaultLowOctave, std::size_t min_count = kMinAvailable);

}  // namespace fbs::estimator
