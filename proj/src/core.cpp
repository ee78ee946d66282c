#include "fbs/core.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace fbs {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnsupportedOrder: return "unsupported-order";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidRange: return "invalid-range";
    case ErrorCode::EmbeddingNotNonnegative: return "embedding-not-nonnegative";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::ModelDegenerate: return "model-degenerate";
    case ErrorCode::InsufficientReplicates: return "insufficient-replicates";
    case ErrorCode::TooManyFailures: return "too-many-failures";
    case ErrorCode::FormatMagic: return "format-magic";
    case ErrorCode::FormatTruncated: return "format-truncated";
    case ErrorCode::FormatDimensionOverflow: return "format-dimension-overflow";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

bool Error::is_input_error() const noexcept
{
    switch (code_) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Config:
    case ErrorCode::Io:
    case ErrorCode::FormatMagic:
    case ErrorCode::FormatTruncated:
    case ErrorCode::FormatDimensionOverflow:
        return true;
    default:
        return false;
    }
}

std::size_t element_count(const Shape& dims) noexcept
{
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> row_major_strides(const Shape& dims)
{
    std::vector<std::size_t> strides(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;)
        strides[i - 1] = strides[i] * dims[i];
    return strides;
}

HurstVector::HurstVector(std::vector<double> h) : h_(std::move(h))
{
    if (h_.empty())
        throw Error(ErrorCode::InvalidArgument, "Hurst vector must have at least one component");
    for (double v : h_) {
        if (!(v > 0.0 && v < 1.0)) {
            std::ostringstream os;
            os << "Hurst component " << v << " outside (0,1)";
            throw Error(ErrorCode::InvalidArgument, os.str());
        }
    }
}

HurstVector HurstVector::projected(double lo, double hi) const
{
    std::vector<double> out(h_);
    for (double& v : out)
        v = std::clamp(v, lo, hi);
    return HurstVector(std::move(out));
}

std::string to_string(const OctaveVector& octave)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < octave.size(); ++i)
        os << (i ? "," : "") << octave[i];
    os << ')';
    return os.str();
}

Field::Field(Shape dims, std::vector<double> data, std::optional<std::vector<double>> hurst_truth)
    : dims_(std::move(dims)), data_(std::move(data))
{
    if (dims_.empty())
        throw Error(ErrorCode::InvalidArgument, "field needs at least one axis");
    for (std::size_t t : dims_)
        if (t < 2)
            throw Error(ErrorCode::InvalidArgument, "every field axis needs at least 2 samples");
    if (data_.size() != element_count(dims_))
        throw Error(ErrorCode::DimensionMismatch, "field data length does not match its dims");
    set_hurst_truth(std::move(hurst_truth));
}

Field Field::zeros(Shape dims)
{
    const std::size_t n = element_count(dims);
    return Field(std::move(dims), std::vector<double>(n, 0.0));
}

double Field::at(std::span<const std::size_t> index) const
{
    if (index.size() != dims_.size())
        throw Error(ErrorCode::DimensionMismatch, "index rank does not match field rank");
    std::size_t offset = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (index[i] >= dims_[i])
            throw Error(ErrorCode::InvalidArgument, "field index out of range");
        offset = offset * dims_[i] + index[i];
    }
    return data_[offset];
}

void Field::set_hurst_truth(std::optional<std::vector<double>> truth)
{
    if (truth && truth->size() != dims_.size())
        throw Error(ErrorCode::DimensionMismatch, "Hurst truth length must equal field rank");
    hurst_truth_ = std::move(truth);
}

Field Field::swapped_axes(std::size_t a, std::size_t b) const
{
    if (a >= rank() || b >= rank())
        throw Error(ErrorCode::InvalidArgument, "axis out of range");
    Shape out_dims = dims_;
    std::swap(out_dims[a], out_dims[b]);
    const auto in_strides = row_major_strides(dims_);
    const auto out_strides = row_major_strides(out_dims);

    std::vector<double> out(data_.size());
    std::vector<std::size_t> idx(rank(), 0);
    for (std::size_t flat = 0; flat < data_.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t i = 0; i < rank(); ++i) {
            idx[i] = rem / in_strides[i];
            rem %= in_strides[i];
        }
        std::swap(idx[a], idx[b]);
        std::size_t target = 0;
        for (std::size_t i = 0; i < rank(); ++i)
            target += idx[i] * out_strides[i];
        out[target] = data_[flat];
    }

    std::optional<std::vector<double>> truth = hurst_truth_;
    if (truth)
        std::swap((*truth)[a], (*truth)[b]);
    return Field(std::move(out_dims), std::move(out), std::move(truth));
}

}  // namespace fbs
