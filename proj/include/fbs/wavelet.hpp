#pragma once

#include "fbs/core.hpp"

#include <span>
#include <vector>

namespace fbs::wavelet {

/// Orthonormal compactly supported filter pair with `order` vanishing moments.
///
/// The highpass is the quadrature mirror of the lowpass,
/// g_k = (-1)^k h_{2N-1-k}, and both have length 2N. The wavelet is
/// supported on [0, 2N-1]; support_len() is that width.
struct WaveletFilter {
    int order = 0;
    std::vector<double> lowpass;
    std::vector<double> highpass;

    int length() const noexcept { return 2 * order; }
    int support_len() const noexcept { return 2 * order - 1; }
};

inline constexpr int kMaxDaubechiesOrder = 10;

/// Daubechies filter with N vanishing moments, 1 <= N <= 10.
/// Throws Error(UnsupportedOrder) outside that range. All orders are built
/// once on first use and served from a table afterwards.
const WaveletFilter& daubechies(int order);

/// Copying variant of daubechies().
WaveletFilter make_daubechies(int order);

/// Samples of the mother wavelet psi at x = k 2^-depth, k = 0..support_len*2^depth.
struct CascadeTable {
    int depth = 0;
    int support_len = 0;
    std::vector<double> psi;

    double step() const noexcept;
};

/// Evaluates psi on a dyadic grid via the two-scale refinement relation,
/// starting from the exact scaling-function values at the integers.
/// Valid depths are 1..16.
CascadeTable cascade_table(const WaveletFilter& filter, int depth);

/// Number of boundary-free coefficients at level j of a signal of length len:
/// floor(len / 2^j - (2N-1)), clamped at zero.
std::size_t available_count(std::size_t len, int j, const WaveletFilter& filter);

/// Level-j detail coefficients: j-1 lowpass/decimate stages then one
/// highpass/decimate stage, no padding. Coefficient k starts at input offset
/// 2^j k. Throws Error(InsufficientData) when len < 2^j * 2N.
std::vector<double> detail_1d(std::span<const double> signal, const WaveletFilter& filter, int j);

/// All detail levels 1..j_max of one signal in a single pyramid pass.
/// Entry [j-1] equals detail_1d(signal, filter, j) bit for bit.
std::vector<std::vector<double>> detail_levels(std::span<const double> signal, const WaveletFilter& filter, int j_max);

/// Available tensor-product wavelet coefficients at one octave vector.
struct CoefficientGrid {
    OctaveVector octave;
    std::vector<std::size_t> counts;
    std::vector<double> coeffs;

    std::size_t size() const noexcept { return coeffs.size(); }
};

/// Throws Error(InsufficientData) unless every j_i >= 1 and
/// 2^{j_i} (support_len + 1) <= T_i.
void validate_octave(const OctaveVector& octave, const Shape& dims, const WaveletFilter& filter);

CoefficientGrid analyze_octave(const Field& field, const WaveletFilter& filter, const OctaveVector& octave);

/// Same as calling analyze_octave for each octave, but detail pyramids along
/// each axis are shared between octaves with a common prefix. Results are in
/// the order of `octaves`.
std::vector<CoefficientGrid> analyze_octaves(const Field& field, const WaveletFilter& filter,
                                             std::span<const OctaveVector> octaves);

/// S(J): mean of squared coefficients.
double sample_variance(const CoefficientGrid& grid);

/// Every integer vector between low and high (inclusive), lexicographic order.
std::vector<OctaveVector> octave_box(const OctaveVector& low, const OctaveVector& high);

}  // namespace fbs::wavelet
