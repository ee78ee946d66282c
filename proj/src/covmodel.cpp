#include "fbs/covmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fbs::covmodel {

namespace {

constexpr std::size_t kMaxCachedProfiles = 1024;

}  // namespace

// R[tau] = delta^2 2^{-gap/2} sum_b psi_D[tau + b] psi_{D+gap}[b], the discrete
// cross-correlation of the fine wavelet with the dilated coarse one.
struct CovarianceModel::Correlation {
    long long tau_min = 0;
    std::vector<double> r;
};

// C(e) for e in [-e_max, e_max], plus prefix sums of C(e)^2.
struct CovarianceModel::Profile {
    long long e_max = 0;
    std::vector<double> values;
    std::vector<double> sq_prefix;  // sq_prefix[i] = sum_{t<i} values[t]^2

    double at(long long e) const { return values[static_cast<std::size_t>(e + e_max)]; }

    double sq_sum(long long lo, long long hi) const
    {
        lo = std::max(lo, -e_max);
        hi = std::min(hi, e_max);
        if (lo > hi)
            return 0.0;
        return sq_prefix[static_cast<std::size_t>(hi + e_max + 1)] - sq_prefix[static_cast<std::size_t>(lo + e_max)];
    }
};

void CovModelConfig::validate(const wavelet::WaveletFilter& filter) const
{
    if (cascade_depth < 6)
        throw Error(ErrorCode::Config, "cascade_depth must be >= 6");
    if (lag_cap < 2 * filter.support_len())
        throw Error(ErrorCode::Config, "lag_cap must be >= 2(2N-1)");
    if (octaves.empty() || octaves.size() != counts.size())
        throw Error(ErrorCode::Config, "covariance model needs one count vector per octave");
    const std::size_t d = octaves.front().size();
    int lo = 1 << 30, hi = -1;
    for (std::size_t l = 0; l < octaves.size(); ++l) {
        if (octaves[l].size() != d || counts[l].size() != d)
            throw Error(ErrorCode::Config, "inconsistent octave rank in covariance model");
        for (std::size_t i = 0; i < d; ++i) {
            if (counts[l][i] == 0)
                throw Error(ErrorCode::Config, "coefficient counts must be positive");
            if (octaves[l][i] < 0)
                throw Error(ErrorCode::Config, "octaves must be nonnegative");
            lo = std::min(lo, octaves[l][i]);
            hi = std::max(hi, octaves[l][i]);
        }
    }
    if (cascade_depth + (hi - lo) > 16)
        throw Error(ErrorCode::Config, "cascade_depth plus octave span exceeds the cascade limit of 16");
}

CovModelConfig CovModelConfig::for_system(const estimator::RegressionSystem& system)
{
    CovModelConfig cfg;
    cfg.octaves = system.octaves;
    cfg.counts = system.axis_counts;
    return cfg;
}

CovarianceModel::CovarianceModel(const wavelet::WaveletFilter& filter, CovModelConfig config)
    : filter_(filter), config_(std::move(config))
{
    config_.validate(filter_);
}

CovarianceModel::~CovarianceModel() = default;

std::size_t CovarianceModel::cached_profiles() const
{
    std::lock_guard lock(mutex_);
    return profiles_.size();
}

std::shared_ptr<const wavelet::CascadeTable> CovarianceModel::cascade(int depth) const
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = cascades_.find(depth); it != cascades_.end())
            return it->second;
    }
    auto table = std::make_shared<const wavelet::CascadeTable>(wavelet::cascade_table(filter_, depth));
    std::lock_guard lock(mutex_);
    return cascades_.emplace(depth, std::move(table)).first->second;
}

std::shared_ptr<const CovarianceModel::Correlation> CovarianceModel::correlation(int gap) const
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = correlations_.find(gap); it != correlations_.end())
            return it->second;
    }
    const int depth = config_.cascade_depth;
    if (depth + gap > 16)
        throw Error(ErrorCode::InvalidArgument, "octave gap too large for the configured cascade depth");
    const auto fine = cascade(depth);
    const auto coarse = cascade(depth + gap);
    const auto& f = fine->psi;
    const auto& c = coarse->psi;
    const long long n_f = static_cast<long long>(f.size());
    const long long n_c = static_cast<long long>(c.size());

    auto corr = std::make_shared<Correlation>();
    corr->tau_min = -(n_c - 1);
    corr->r.assign(static_cast<std::size_t>(n_f + n_c - 1), 0.0);
    const double delta = std::ldexp(1.0, -depth);
    const double scale = delta * delta * std::exp2(-0.5 * gap);
    for (long long tau = corr->tau_min; tau < n_f; ++tau) {
        const long long b_lo = std::max(0LL, -tau);
        const long long b_hi = std::min(n_c, n_f - tau);
        double acc = 0.0;
        for (long long b = b_lo; b < b_hi; ++b)
            acc += f[static_cast<std::size_t>(tau + b)] * c[static_cast<std::size_t>(b)];
        corr->r[static_cast<std::size_t>(tau - corr->tau_min)] = scale * acc;
    }

    std::lock_guard lock(mutex_);
    return correlations_.emplace(gap, std::move(corr)).first->second;
}

std::shared_ptr<const CovarianceModel::Profile> CovarianceModel::profile(double h, int gap) const
{
    const long long h_key = std::llround(h * 1e6);
    const auto key = std::make_pair(h_key, gap);
    {
        std::lock_guard lock(mutex_);
        if (auto it = profiles_.find(key); it != profiles_.end())
            return it->second;
    }

    const double hr = static_cast<double>(h_key) * 1e-6;
    const double expo = 2.0 * hr;
    const auto corr = correlation(gap);
    const long long steps = 1LL << config_.cascade_depth;  // grid points per unit offset
    const long long e_max = static_cast<long long>(config_.lag_cap) << gap;

    const long long tau_min = corr->tau_min;
    const long long tau_max = tau_min + static_cast<long long>(corr->r.size()) - 1;
    const long long n_max = std::max(-tau_min, tau_max) + e_max * steps;
    std::vector<double> pw(static_cast<std::size_t>(n_max + 1));
    for (long long n = 0; n <= n_max; ++n)
        pw[static_cast<std::size_t>(n)] = std::pow(static_cast<double>(n), expo);

    auto prof = std::make_shared<Profile>();
    prof->e_max = e_max;
    prof->values.resize(static_cast<std::size_t>(2 * e_max + 1));
    const double front = -0.5 * std::pow(std::ldexp(1.0, -config_.cascade_depth), expo);
    const double* r = corr->r.data();
    const long long len = static_cast<long long>(corr->r.size());
    for (long long e = -e_max; e <= e_max; ++e) {
        // n = tau + e*steps, split where n changes sign.
        const long long shift = tau_min + e * steps;  // n at r[0]
        double acc = 0.0;
        const long long split = std::clamp(-shift, 0LL, len);  // first index with n >= 0
        for (long long t = 0; t < split; ++t)
            acc += r[t] * pw[static_cast<std::size_t>(-(shift + t))];
        for (long long t = split; t < len; ++t)
            acc += r[t] * pw[static_cast<std::size_t>(shift + t)];
        prof->values[static_cast<std::size_t>(e + e_max)] = front * acc;
    }
    prof->sq_prefix.assign(prof->values.size() + 1, 0.0);
    for (std::size_t i = 0; i < prof->values.size(); ++i)
        prof->sq_prefix[i + 1] = prof->sq_prefix[i] + prof->values[i] * prof->values[i];

    std::lock_guard lock(mutex_);
    if (profiles_.size() >= kMaxCachedProfiles)
        profiles_.clear();
    return profiles_.emplace(key, std::move(prof)).first->second;
}

double CovarianceModel::kernel_cross_cov_1d(double h, int j, long long k, int j2, long long k2) const
{
    if (!(h > 0.0 && h < 1.0))
        throw Error(ErrorCode::InvalidArgument, "Hurst exponent outside (0,1)");
    if (j < 0 || j2 < 0)
        throw Error(ErrorCode::InvalidArgument, "octaves must be nonnegative");
    if (j > j2) {
        std::swap(j, j2);
        std::swap(k, k2);
    }
    const int gap = j2 - j;
    const long long e = k - (k2 << gap);
    const auto prof = profile(h, gap);
    if (std::llabs(e) > prof->e_max)
        return 0.0;
    return std::exp2(j * (2.0 * h + 1.0)) * prof->at(e);
}

double CovarianceModel::axis_factor(double h, int j_a, int j_b, std::size_t n_a, std::size_t n_b) const
{
    if (j_a > j_b) {
        std::swap(j_a, j_b);
        std::swap(n_a, n_b);
    }
    const int gap = j_b - j_a;
    const auto prof = profile(h, gap);
    const auto base = profile(h, 0);
    const double v0 = base->at(0);

    // Pairs (k fine, k' coarse) with offset e = k - 2^gap k'.
    double sum = 0.0;
    const long long n_fine = static_cast<long long>(n_a);
    for (long long kc = 0; kc < static_cast<long long>(n_b); ++kc) {
        const long long off = kc << gap;
        sum += prof->sq_sum(-off, n_fine - 1 - off);
    }
    return std::exp2(-gap * (2.0 * h + 1.0)) * sum /
           (static_cast<double>(n_a) * static_cast<double>(n_b) * v0 * v0);
}

double CovarianceModel::variance_of_log_S(const HurstVector& hurst, const OctaveVector& octave_h,
                                          const OctaveVector& octave_l, std::span<const std::size_t> counts_h,
                                          std::span<const std::size_t> counts_l) const
{
    const std::size_t d = hurst.size();
    if (octave_h.size() != d || octave_l.size() != d || counts_h.size() != d || counts_l.size() != d)
        throw Error(ErrorCode::DimensionMismatch, "rank mismatch in variance_of_log_S");
    double prod = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (counts_h[i] == 0 || counts_l[i] == 0)
            throw Error(ErrorCode::InvalidArgument, "coefficient counts must be positive");
        prod *= axis_factor(hurst[i], octave_h[i], octave_l[i], counts_h[i], counts_l[i]);
    }
    const double log2e = std::numbers::log2e;
    return 2.0 * log2e * log2e * prod;
}

Eigen::MatrixXd CovarianceModel::g_matrix(const HurstVector& hurst) const
{
    const auto m = static_cast<Eigen::Index>(config_.octaves.size());
    if (hurst.size() != config_.octaves.front().size())
        throw Error(ErrorCode::DimensionMismatch, "Hurst vector rank does not match the octave layout");
    if (config_.g_override) {
        Eigen::MatrixXd g = config_.g_override(hurst);
        if (g.rows() != m || g.cols() != m)
            throw Error(ErrorCode::DimensionMismatch, "overridden G has the wrong size");
        return g;
    }

    Eigen::MatrixXd g(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a; b < m; ++b) {
            const auto ua = static_cast<std::size_t>(a);
            const auto ub = static_cast<std::size_t>(b);
            g(a, b) = variance_of_log_S(hurst, config_.octaves[ua], config_.octaves[ub], config_.counts[ua],
                                        config_.counts[ub]);
            g(b, a) = g(a, b);
        }
    }
    return repair_positive_definite(g);
}

Eigen::MatrixXd repair_positive_definite(const Eigen::MatrixXd& g)
{
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw Error(ErrorCode::ModelDegenerate, "eigendecomposition of G failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double top = lambda.maxCoeff();
    if (!(top > 0.0) || !std::isfinite(top))
        throw Error(ErrorCode::ModelDegenerate, "G has no positive eigenvalue");
    const double floor = 1e-12 * top;
    double clipped = 0.0;
    const double mass = lambda.cwiseAbs().sum();
    bool changed = false;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < floor) {
            clipped += floor - lambda(i);
            lambda(i) = floor;
            changed = true;
        }
    }
    if (clipped > 0.01 * mass) {
        std::ostringstream os;
        os << "G repair would clip " << clipped / mass * 100.0 << "% of the eigenvalue mass";
        throw Error(ErrorCode::ModelDegenerate, os.str());
    }
    if (!changed)
        return sym;
    const Eigen::MatrixXd fixed = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (fixed + fixed.transpose());
}

TwoStepResult two_step_fit(const estimator::RegressionSystem& system, const CovarianceModel& model)
{
    const auto& cfg = model.config();
    if (cfg.octaves != system.octaves || cfg.counts != system.axis_counts)
        throw Error(ErrorCode::DimensionMismatch, "covariance model was built for a different octave layout");

    TwoStepResult out;
    out.ols = estimator::fit_ols(system);

    std::vector<double> pilot(out.ols.hurst);
    for (double& v : pilot)
        v = std::clamp(v, kProjectLow, kProjectHigh);
    out.g = model.g_matrix(HurstVector(std::move(pilot)));

    const auto m = static_cast<Eigen::Index>(system.size());
    out.ols.covariance = estimator::asymptotic_covariance(system, out.g, Eigen::MatrixXd::Identity(m, m));
    out.two_step = estimator::fit(system, out.g, estimator::Method::TwoStep);
    return out;
}

}  // namespace fbs::covmodel
