#include "fbs/synthesis.hpp"

#include "fbs/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

namespace fbs::synthesis {

namespace {

// FFTW planning is not thread safe; execution with fftw_execute_dft is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)))
    {
        if (!ptr)
            throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* ptr;
};

}  // namespace

struct FgnSheetSampler::Plan {
    fftw_plan handle = nullptr;
    std::size_t size = 0;

    explicit Plan(const Shape& embed)
    {
        size = element_count(embed);
        std::vector<int> n(embed.begin(), embed.end());
        FftwBuffer scratch(size);
        std::lock_guard lock(planner_mutex());
        handle = fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch.ptr, scratch.ptr, FFTW_BACKWARD,
                               FFTW_ESTIMATE);
        if (!handle)
            throw Error(ErrorCode::InvalidArgument, "FFT planning failed");
    }
    ~Plan()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(handle);
    }
};

double fgn_autocovariance(double h, long long lag)
{
    const double k = std::abs(static_cast<double>(lag));
    const double e = 2.0 * h;
    return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) + std::pow(std::abs(k - 1.0), e));
}

std::vector<double> circulant_eigenvalues_1d(double h, std::size_t n)
{
    if (n < 2)
        throw Error(ErrorCode::InvalidArgument, "circulant embedding needs n >= 2");
    if (!(h > 0.0 && h < 1.0))
        throw Error(ErrorCode::InvalidArgument, "Hurst exponent outside (0,1)");

    const std::size_t m = 2 * (n - 1);
    std::vector<double> row(m);
    for (std::size_t k = 0; k < n; ++k)
        row[k] = fgn_autocovariance(h, static_cast<long long>(k));
    for (std::size_t k = 1; k + 1 < n; ++k)
        row[m - k] = row[k];

    const std::size_t half = m / 2 + 1;
    FftwBuffer spectrum(half);
    {
        std::lock_guard lock(planner_mutex());
        fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(m), row.data(), spectrum.ptr, FFTW_ESTIMATE);
        fftw_execute(p);
        fftw_destroy_plan(p);
    }

    std::vector<double> eig(m);
    for (std::size_t q = 0; q < half; ++q) {
        eig[q] = spectrum.ptr[q][0];
        if (q > 0 && q < m - q)
            eig[m - q] = eig[q];
    }

    const double max_eig = *std::max_element(eig.begin(), eig.end());
    const double min_eig = *std::min_element(eig.begin(), eig.end());
    if (min_eig < -kEigenClip * max_eig) {
        std::ostringstream os;
        os << "circulant embedding for h=" << h << ", n=" << n << " has negative eigenvalue " << min_eig;
        throw Error(ErrorCode::EmbeddingNotNonnegative, os.str());
    }
    for (double& v : eig)
        v = std::max(v, 0.0);
    return eig;
}

FgnSheetSampler::FgnSheetSampler(HurstVector hurst, Shape dims) : hurst_(std::move(hurst)), dims_(std::move(dims))
{
    if (dims_.empty() || dims_.size() != hurst_.size())
        throw Error(ErrorCode::DimensionMismatch, "Hurst vector and dims must have the same nonzero rank");
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] < 2)
            throw Error(ErrorCode::InvalidArgument, "every noise axis needs at least 2 samples");
        const auto eig = circulant_eigenvalues_1d(hurst_[i], dims_[i]);
        const double m = static_cast<double>(eig.size());
        std::vector<double> scale(eig.size());
        for (std::size_t q = 0; q < eig.size(); ++q)
            scale[q] = std::sqrt(eig[q] / m);
        mode_scale_.push_back(std::move(scale));
        embed_.push_back(eig.size());
    }
    plan_ = std::make_unique<Plan>(embed_);
}

FgnSheetSampler::~FgnSheetSampler() = default;
FgnSheetSampler::FgnSheetSampler(FgnSheetSampler&&) noexcept = default;
FgnSheetSampler& FgnSheetSampler::operator=(FgnSheetSampler&&) noexcept = default;

std::pair<Field, Field> FgnSheetSampler::sample_pair(std::uint64_t key) const
{
    const std::size_t d = embed_.size();
    const std::size_t total = plan_->size;
    FftwBuffer buf(total);
    CounterRng rng(key);

    // Row-major walk over the torus; the scale of a mode is the product of
    // per-axis factors, accumulated for all but the last axis.
    std::vector<std::size_t> idx(d, 0);
    const std::size_t last = embed_[d - 1];
    const auto& last_scale = mode_scale_[d - 1];
    for (std::size_t base = 0; base < total; base += last) {
        double prefix = 1.0;
        for (std::size_t a = 0; a + 1 < d; ++a)
            prefix *= mode_scale_[a][idx[a]];
        for (std::size_t q = 0; q < last; ++q) {
            const double s = prefix * last_scale[q];
            const double re = rng.gaussian();
            const double im = rng.gaussian();
            buf.ptr[base + q][0] = s * re;
            buf.ptr[base + q][1] = s * im;
        }
        for (std::size_t a = d - 1; a-- > 0;) {
            if (++idx[a] < embed_[a])
                break;
            idx[a] = 0;
        }
    }

    fftw_execute_dft(plan_->handle, buf.ptr, buf.ptr);

    const std::size_t n = element_count(dims_);
    std::vector<double> re(n), im(n);
    const auto embed_strides = row_major_strides(embed_);
    std::vector<std::size_t> out_idx(d, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t src = 0;
        for (std::size_t a = 0; a < d; ++a)
            src += out_idx[a] * embed_strides[a];
        re[flat] = buf.ptr[src][0];
        im[flat] = buf.ptr[src][1];
        for (std::size_t a = d; a-- > 0;) {
            if (++out_idx[a] < dims_[a])
                break;
            out_idx[a] = 0;
        }
    }
    return {Field(dims_, std::move(re), hurst_.values()), Field(dims_, std::move(im), hurst_.values())};
}

Field synth_fgn_sheet(const HurstVector& hurst, const Shape& dims, std::uint64_t seed)
{
    FgnSheetSampler sampler(hurst, dims);
    return std::move(sampler.sample_pair(seed).first);
}

Field integrate_to_fbs(const Field& noise)
{
    const Shape& in_dims = noise.dims();
    const std::size_t d = in_dims.size();
    Shape out_dims(in_dims);
    for (auto& t : out_dims)
        ++t;
    std::vector<double> out(element_count(out_dims), 0.0);
    const auto out_strides = row_major_strides(out_dims);

    // Place the noise at offset (1, ..., 1).
    std::vector<std::size_t> idx(d, 0);
    const auto src = noise.data();
    for (std::size_t flat = 0; flat < src.size(); ++flat) {
        std::size_t dst = 0;
        for (std::size_t a = 0; a < d; ++a)
            dst += (idx[a] + 1) * out_strides[a];
        out[dst] = src[flat];
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < in_dims[a])
                break;
            idx[a] = 0;
        }
    }

    for (std::size_t axis = 0; axis < d; ++axis) {
        const std::size_t len = out_dims[axis];
        const std::size_t stride = out_strides[axis];
        const std::size_t outer = out.size() / (len * stride);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < stride; ++in) {
                double* line = out.data() + o * len * stride + in;
                for (std::size_t t = 1; t < len; ++t)
                    line[t * stride] += line[(t - 1) * stride];
            }
        }
    }
    return Field(std::move(out_dims), std::move(out), noise.hurst_truth());
}

std::pair<Field, Field> sample_fbs_pair(const FgnSheetSampler& sampler, std::uint64_t key)
{
    auto [a, b] = sampler.sample_pair(key);
    return {integrate_to_fbs(a), integrate_to_fbs(b)};
}

Shape noise_dims_for(const Shape& fbs_dims)
{
    Shape out(fbs_dims);
    for (auto& t : out) {
        if (t < 3)
            throw Error(ErrorCode::InvalidArgument, "sheet axes need at least 3 samples");
        --t;
    }
    return out;
}

}  // namespace fbs::synthesis
