#pragma once

#include "fbs/core.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace fbs::synthesis {

/// Autocovariance of unit-step fractional Gaussian noise:
/// (|k+1|^{2h} - 2|k|^{2h} + |k-1|^{2h}) / 2.
double fgn_autocovariance(double h, long long lag);

inline constexpr double kEigenClip = 1e-10;

/// Eigenvalues of the minimal circulant embedding (length 2(n-1)) of the
/// fGn covariance. Tiny negatives (>= -1e-10 * max) are clipped to zero;
/// anything more negative throws Error(EmbeddingNotNonnegative).
std::vector<double> circulant_eigenvalues_1d(double h, std::size_t n);

/// Exact sampler for stationary fractional-Gaussian-noise sheets whose
/// covariance is the tensor product of per-axis fGn covariances.
///
/// Eigenvalues are computed once at construction; sampling is const and may
/// be called concurrently from several threads.
class FgnSheetSampler {
public:
    FgnSheetSampler(HurstVector hurst, Shape dims);
    ~FgnSheetSampler();
    FgnSheetSampler(FgnSheetSampler&&) noexcept;
    FgnSheetSampler& operator=(FgnSheetSampler&&) noexcept;

    const HurstVector& hurst() const noexcept { return hurst_; }
    const Shape& dims() const noexcept { return dims_; }
    const Shape& embedding_dims() const noexcept { return embed_; }

    /// Real and imaginary parts of one embedded-torus FFT: two independent
    /// replicates drawn from the stream `key`.
    std::pair<Field, Field> sample_pair(std::uint64_t key) const;

private:
    struct Plan;

    HurstVector hurst_;
    Shape dims_;
    Shape embed_;
    std::vector<std::vector<double>> mode_scale_;  // sqrt(lambda / m) per axis
    std::unique_ptr<Plan> plan_;
};

/// One stationary-increment sheet (real part of the pair drawn from `seed`).
Field synth_fgn_sheet(const HurstVector& hurst, const Shape& dims, std::uint64_t seed);

/// Cumulative sum along every axis after prepending a zero layer, so the
/// result vanishes whenever any index is 0. Output dims are input dims + 1.
Field integrate_to_fbs(const Field& noise);

/// Fractional Brownian sheet pair with `fbs_dims` samples per axis
/// (noise of fbs_dims - 1, integrated). The sampler must have been built for
/// fbs_dims - 1.
std::pair<Field, Field> sample_fbs_pair(const FgnSheetSampler& sampler, std::uint64_t key);

/// Noise dims matching a sheet of `fbs_dims` samples per axis.
Shape noise_dims_for(const Shape& fbs_dims);

}  // namespace fbs::synthesis
