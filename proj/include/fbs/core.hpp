#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbs {

enum class ErrorCode {
    InvalidArgument,
    UnsupportedOrder,
    InsufficientData,
    InvalidRange,
    EmbeddingNotNonnegative,
    RankDeficient,
    NotPositiveDefinite,
    SingularSystem,
    DimensionMismatch,
    ModelDegenerate,
    InsufficientReplicates,
    TooManyFailures,
    FormatMagic,
    FormatTruncated,
    FormatDimensionOverflow,
    Config,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Configuration, format and I/O problems, as opposed to numerical failures.
    bool is_input_error() const noexcept;

private:
    ErrorCode code_;
};

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& dims) noexcept;

/// Row-major strides (last axis contiguous).
std::vector<std::size_t> row_major_strides(const Shape& dims);

/// Per-axis Hurst exponents, each strictly inside (0, 1).
class HurstVector {
public:
    HurstVector() = default;
    explicit HurstVector(std::vector<double> h);

    std::size_t size() const noexcept { return h_.size(); }
    double operator[](std::size_t i) const { return h_[i]; }
    const std::vector<double>& values() const noexcept { return h_; }

    /// Clamp every component into [lo, hi]; used where a model needs a valid H.
    HurstVector projected(double lo, double hi) const;

    friend bool operator==(const HurstVector&, const HurstVector&) = default;

private:
    std::vector<double> h_;
};

/// Octave (dyadic scale level) per axis.
struct OctaveVector {
    std::vector<int> j;

    std::size_t size() const noexcept { return j.size(); }
    int operator[](std::size_t i) const { return j[i]; }

    friend bool operator==(const OctaveVector&, const OctaveVector&) = default;
    friend auto operator<=>(const OctaveVector&, const OctaveVector&) = default;
};

std::string to_string(const OctaveVector& octave);

/// d-dimensional lattice of real samples stored row-major.
class Field {
public:
    Field() = default;
    Field(Shape dims, std::vector<double> data, std::optional<std::vector<double>> hurst_truth = std::nullopt);

    /// Zero-filled field.
    static Field zeros(Shape dims);

    const Shape& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    double at(std::span<const std::size_t> index) const;

    const std::optional<std::vector<double>>& hurst_truth() const noexcept { return hurst_truth_; }
    void set_hurst_truth(std::optional<std::vector<double>> truth);

    /// Swap two axes (a general transpose restricted to one pair).
    Field swapped_axes(std::size_t a, std::size_t b) const;

private:
    Shape dims_;
    std::vector<double> data_;
    std::optional<std::vector<double>> hurst_truth_;
};

}  // namespace fbs
