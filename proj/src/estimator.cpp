#include "fbs/estimator.hpp"

#include <cmath>
#include <sstream>

namespace fbs::estimator {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* what)
{
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not symmetric");
}

Eigen::LLT<Eigen::MatrixXd> positive_definite_factor(const Eigen::MatrixXd& w)
{
    require_symmetric(w, "weight matrix");
    const Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || lo <= 1e-10 * hi)
        throw Error(ErrorCode::NotPositiveDefinite, "weight matrix is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "weight matrix Cholesky failed");
    return llt;
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* what)
{
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << what << " is " << m.rows() << "x" << m.cols() << ", expected " << n << "x" << n;
        throw Error(ErrorCode::DimensionMismatch, os.str());
    }
}

EstimatorReport solve(const RegressionSystem& system, const Eigen::MatrixXd& weight, Method tag)
{
    const auto m = static_cast<Eigen::Index>(system.size());
    require_square(weight, m, "weight matrix");
    const auto llt = positive_definite_factor(weight);

    // Whitened least squares: with W = C C', minimize |C^-1 (L - A a)|.
    const Eigen::MatrixXd aw = llt.matrixL().solve(system.design);
    const Eigen::VectorXd lw = llt.matrixL().solve(system.logvars);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw);
    qr.setThreshold(1e-12);
    if (qr.rank() < aw.cols())
        throw Error(ErrorCode::SingularSystem, "normal equations are singular");

    EstimatorReport report;
    report.method = tag;
    report.alpha = qr.solve(lw);
    const std::size_t d = system.rank();
    report.hurst.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        report.hurst[i] = report.alpha(static_cast<Eigen::Index>(i)) / 2.0 - 0.5;
        if (!std::isfinite(report.hurst[i]))
            throw Error(ErrorCode::SingularSystem, "non-finite Hurst estimate");
        if (!(report.hurst[i] > 0.0 && report.hurst[i] < 1.0))
            report.out_of_range = true;
    }
    report.intercept = report.alpha(static_cast<Eigen::Index>(d));
    report.fitted = system.design * report.alpha;
    report.residuals = system.logvars - report.fitted;
    return report;
}

}  // namespace

std::size_t RegressionSystem::count(std::size_t row) const
{
    std::size_t n = 1;
    for (std::size_t c : axis_counts.at(row))
        n *= c;
    return n;
}

RegressionSystem make_system(std::vector<OctaveVector> octaves, Eigen::VectorXd logvars,
                             std::vector<std::vector<std::size_t>> axis_counts)
{
    if (octaves.empty())
        throw Error(ErrorCode::InvalidArgument, "regression needs at least one octave");
    const std::size_t d = octaves.front().size();
    const std::size_t m = octaves.size();
    if (static_cast<std::size_t>(logvars.size()) != m || axis_counts.size() != m)
        throw Error(ErrorCode::DimensionMismatch, "octaves, logvars and counts must have the same length");
    if (m < d + 1)
        throw Error(ErrorCode::RankDeficient, "need at least d+1 octaves for the regression");

    RegressionSystem sys;
    sys.design.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d + 1));
    for (std::size_t l = 0; l < m; ++l) {
        if (octaves[l].size() != d || axis_counts[l].size() != d)
            throw Error(ErrorCode::DimensionMismatch, "inconsistent octave rank");
        for (std::size_t i = 0; i < d; ++i)
            sys.design(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = octaves[l][i];
        sys.design(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(d)) = 1.0;
        if (!std::isfinite(logvars(static_cast<Eigen::Index>(l))))
            throw Error(ErrorCode::InsufficientData, "log-variance at " + to_string(octaves[l]) + " is not finite");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.design);
    if (lu.rank() < static_cast<Eigen::Index>(d + 1))
        throw Error(ErrorCode::RankDeficient, "design matrix is rank deficient");

    sys.octaves = std::move(octaves);
    sys.logvars = std::move(logvars);
    sys.axis_counts = std::move(axis_counts);
    return sys;
}

RegressionSystem build_system(const Field& field, const wavelet::WaveletFilter& filter,
                              const std::vector<OctaveVector>& octaves)
{
    if (octaves.size() < field.rank() + 1)
        throw Error(ErrorCode::RankDeficient, "need at least d+1 octaves for the regression");
    const auto grids = wavelet::analyze_octaves(field, filter, octaves);
    Eigen::VectorXd logvars(static_cast<Eigen::Index>(grids.size()));
    std::vector<std::vector<std::size_t>> counts;
    for (std::size_t l = 0; l < grids.size(); ++l) {
        logvars(static_cast<Eigen::Index>(l)) = std::log2(wavelet::sample_variance(grids[l]));
        counts.push_back(grids[l].counts);
    }
    return make_system(octaves, std::move(logvars), std::move(counts));
}

const char* to_string(Method method) noexcept
{
    switch (method) {
    case Method::Ols: return "ols";
    case Method::Gls: return "gls";
    case Method::TwoStep: return "two_step";
    }
    return "unknown";
}

EstimatorReport fit(const RegressionSystem& system, const Eigen::MatrixXd& weight, Method tag)
{
    EstimatorReport report = solve(system, weight, tag);
    report.covariance = asymptotic_covariance(system, weight, weight);
    return report;
}

EstimatorReport fit(const RegressionSystem& system, const Eigen::MatrixXd& weight, const Eigen::MatrixXd& sigma_l,
                    Method tag)
{
    EstimatorReport report = solve(system, weight, tag);
    report.covariance = asymptotic_covariance(system, sigma_l, weight);
    return report;
}

EstimatorReport fit_ols(const RegressionSystem& system)
{
    const auto m = static_cast<Eigen::Index>(system.size());
    return fit(system, Eigen::MatrixXd::Identity(m, m), Method::Ols);
}

Eigen::MatrixXd asymptotic_covariance(const RegressionSystem& system, const Eigen::MatrixXd& sigma_l,
                                      const Eigen::MatrixXd& weight)
{
    const auto m = static_cast<Eigen::Index>(system.size());
    require_square(sigma_l, m, "sigma_L");
    require_square(weight, m, "weight matrix");
    require_symmetric(sigma_l, "sigma_L");
    const auto llt = positive_definite_factor(weight);

    const Eigen::MatrixXd& a = system.design;
    const Eigen::MatrixXd winv_a = llt.solve(a);
    const Eigen::MatrixXd normal = a.transpose() * winv_a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible())
        throw Error(ErrorCode::SingularSystem, "A' W^-1 A is singular");
    const Eigen::MatrixXd normal_inv = lu.inverse();
    const Eigen::MatrixXd meat = winv_a.transpose() * sigma_l * winv_a;
    const Eigen::MatrixXd cov = 0.25 * normal_inv * meat * normal_inv;
    return 0.5 * (cov + cov.transpose());
}

OctaveRange default_octave_range(const Shape& dims, const wavelet::WaveletFilter& filter, int low,
                                 std::size_t min_count)
{
    OctaveRange range;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        int high = low - 1;
        for (int j = low; j < 40; ++j) {
            const std::size_t need = (std::size_t{1} << j) * static_cast<std::size_t>(filter.support_len() + 1);
            if (need > dims[i] || wavelet::available_count(dims[i], j, filter) < min_count)
                break;
            high = j;
        }
        if (high <= low) {
            std::ostringstream os;
            os << "axis " << i << " of length " << dims[i] << " supports fewer than two octaves starting at " << low;
            throw Error(ErrorCode::InvalidRange, os.str());
        }
        range.low.j.push_back(low);
        range.high.j.push_back(high);
    }
    return range;
}

}  // namespace fbs::estimator
