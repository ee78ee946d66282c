#include "fbs/wavelet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace fbs::wavelet {

double CascadeTable::step() const noexcept
{
    return std::ldexp(1.0, -depth);
}

namespace {

// phi at the integers 0..M from the eigenvector of the refinement matrix,
// normalized so the values sum to one.
std::vector<double> scaling_at_integers(const WaveletFilter& filter)
{
    const int m = filter.support_len();
    std::vector<double> phi(m + 1, 0.0);
    if (filter.order == 1) {
        phi[0] = 1.0;  // Haar: right-continuous box on [0,1)
        return phi;
    }

    // Unknowns phi(1..m-1); phi(0) = phi(m) = 0 for N >= 2.
    const int n = m - 1;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n + 1, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int row = 1; row <= n; ++row) {
        for (int col = 1; col <= n; ++col) {
            const int k = 2 * row - col;
            if (k >= 0 && k < filter.length())
                sys(row - 1, col - 1) = std::sqrt(2.0) * filter.lowpass[k];
        }
        sys(row - 1, row - 1) -= 1.0;
    }
    sys.row(n).setOnes();
    rhs(n) = 1.0;
    const Eigen::VectorXd sol = sys.colPivHouseholderQr().solve(rhs);
    for (int i = 1; i <= n; ++i)
        phi[i] = sol(i - 1);
    return phi;
}

// One refinement: values at spacing 2^-(d) from values at spacing 2^-(d-1).
std::vector<double> refine(const std::vector<double>& coarse, int coarse_depth, std::span<const double> taps, int m)
{
    const std::size_t fine_len = static_cast<std::size_t>(m) * (std::size_t{1} << (coarse_depth + 1)) + 1;
    const long shift = 1L << coarse_depth;
    std::vector<double> fine(fine_len, 0.0);
    for (std::size_t x = 0; x < fine_len; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
            const long idx = static_cast<long>(x) - static_cast<long>(k) * shift;
            if (idx >= 0 && idx < static_cast<long>(coarse.size()))
                acc += taps[k] * coarse[idx];
        }
        fine[x] = std::sqrt(2.0) * acc;
    }
    return fine;
}

void require_length(std::size_t len, const WaveletFilter& filter, int j)
{
    if (j < 1)
        throw Error(ErrorCode::InvalidArgument, "wavelet level must be >= 1");
    const std::size_t need = (std::size_t{1} << j) * static_cast<std::size_t>(filter.length());
    if (len < need)
        throw Error(ErrorCode::InsufficientData,
                    "signal of length " + std::to_string(len) + " too short for level " + std::to_string(j) +
                        " (need " + std::to_string(need) + ")");
}

// Valid correlation with stride 2: out[k] = sum_m taps[m] in[2k+m].
void filter_decimate(std::span<const double> in, std::span<const double> taps, std::vector<double>& out)
{
    const std::size_t len = taps.size();
    const std::size_t n = in.size() >= len ? (in.size() - len) / 2 + 1 : 0;
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double* x = in.data() + 2 * k;
        double acc = 0.0;
        for (std::size_t m = 0; m < len; ++m)
            acc += taps[m] * x[m];
        out[k] = acc;
    }
}

// Pyramid for levels 1..j_max, each truncated to its available count.
void pyramid(std::span<const double> signal, const WaveletFilter& filter, int j_max,
             std::vector<std::vector<double>>& details)
{
    details.resize(j_max);
    std::vector<double> approx(signal.begin(), signal.end());
    std::vector<double> next;
    for (int j = 1; j <= j_max; ++j) {
        filter_decimate(approx, filter.highpass, details[j - 1]);
        const std::size_t n = available_count(signal.size(), j, filter);
        if (details[j - 1].size() < n)
            throw Error(ErrorCode::InsufficientData, "pyramid produced fewer coefficients than available");
        details[j - 1].resize(n);
        if (j < j_max) {
            filter_decimate(approx, filter.lowpass, next);
            approx.swap(next);
        }
    }
}

// Applies the level pyramid along one axis and returns one array per requested level.
std::map<int, std::pair<Shape, std::vector<double>>> transform_axis(std::span<const double> data, const Shape& dims,
                                                                   std::size_t axis, const std::vector<int>& levels,
                                                                   const WaveletFilter& filter)
{
    const int j_max = *std::max_element(levels.begin(), levels.end());
    const std::size_t len = dims[axis];
    require_length(len, filter, j_max);

    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < dims.size(); ++i)
        inner *= dims[i];
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i)
        outer *= dims[i];

    std::map<int, std::pair<Shape, std::vector<double>>> out;
    for (int j : levels) {
        Shape d = dims;
        d[axis] = available_count(len, j, filter);
        const std::size_t total = element_count(d);
        out.emplace(j, std::make_pair(std::move(d), std::vector<double>(total)));
    }

    std::vector<double> line(len);
    std::vector<std::vector<double>> details;
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const double* base = data.data() + o * len * inner + in;
            for (std::size_t t = 0; t < len; ++t)
                line[t] = base[t * inner];
            pyramid(line, filter, j_max, details);
            for (auto& [j, entry] : out) {
                const auto& det = details[j - 1];
                const std::size_t n = det.size();
                double* dst = entry.second.data() + o * n * inner + in;
                for (std::size_t k = 0; k < n; ++k)
                    dst[k * inner] = det[k];
            }
        }
    }
    return out;
}

void analyze_recursive(std::span<const double> data, const Shape& dims, std::size_t axis,
                       std::span<const OctaveVector> octaves, const std::vector<std::size_t>& subset,
                       const WaveletFilter& filter, std::vector<CoefficientGrid>& results)
{
    std::vector<int> levels;
    for (std::size_t idx : subset)
        levels.push_back(octaves[idx][axis]);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    auto transformed = transform_axis(data, dims, axis, levels, filter);
    for (auto& [j, entry] : transformed) {
        std::vector<std::size_t> sub;
        for (std::size_t idx : subset)
            if (octaves[idx][axis] == j)
                sub.push_back(idx);
        if (axis + 1 == dims.size()) {
            for (std::size_t idx : sub) {
                CoefficientGrid& g = results[idx];
                g.octave = octaves[idx];
                g.counts = entry.first;
                g.coeffs = entry.second;
            }
        } else {
            analyze_recursive(entry.second, entry.first, axis + 1, octaves, sub, filter, results);
        }
    }
}

}  // namespace

CascadeTable cascade_table(const WaveletFilter& filter, int depth)
{
    if (depth < 1 || depth > 16)
        throw Error(ErrorCode::InvalidArgument, "cascade depth must be in 1..16");
    const int m = filter.support_len();
    std::vector<double> phi = scaling_at_integers(filter);
    for (int d = 0; d + 1 < depth; ++d)
        phi = refine(phi, d, filter.lowpass, m);

    CascadeTable table;
    table.depth = depth;
    table.support_len = m;
    table.psi = refine(phi, depth - 1, filter.highpass, m);
    return table;
}

std::size_t available_count(std::size_t len, int j, const WaveletFilter& filter)
{
    // floor(len/2^j - M) == floor((len - M 2^j) / 2^j) for the integer numerator.
    const long long scale = 1LL << j;
    const long long num = static_cast<long long>(len) - static_cast<long long>(filter.support_len()) * scale;
    if (num < scale)
        return 0;
    return static_cast<std::size_t>(num / scale);
}

std::vector<std::vector<double>> detail_levels(std::span<const double> signal, const WaveletFilter& filter, int j_max)
{
    require_length(signal.size(), filter, j_max);
    std::vector<std::vector<double>> details;
    pyramid(signal, filter, j_max, details);
    return details;
}

std::vector<double> detail_1d(std::span<const double> signal, const WaveletFilter& filter, int j)
{
    auto levels = detail_levels(signal, filter, j);
    return std::move(levels.back());
}

void validate_octave(const OctaveVector& octave, const Shape& dims, const WaveletFilter& filter)
{
    if (octave.size() != dims.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "octave " + to_string(octave) + " has wrong rank for a " + std::to_string(dims.size()) + "-d field");
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (octave[i] < 1 || octave[i] > 40)
            throw Error(ErrorCode::InvalidArgument, "octave components must be in 1..40");
        const std::size_t need = (std::size_t{1} << octave[i]) * static_cast<std::size_t>(filter.support_len() + 1);
        if (need > dims[i])
            throw Error(ErrorCode::InsufficientData, "octave " + to_string(octave) + " has no available coefficient on axis " +
                                                         std::to_string(i));
    }
}

CoefficientGrid analyze_octave(const Field& field, const WaveletFilter& filter, const OctaveVector& octave)
{
    return std::move(analyze_octaves(field, filter, std::span(&octave, 1)).front());
}

std::vector<CoefficientGrid> analyze_octaves(const Field& field, const WaveletFilter& filter,
                                             std::span<const OctaveVector> octaves)
{
    for (const auto& o : octaves)
        validate_octave(o, field.dims(), filter);
    std::vector<CoefficientGrid> results(octaves.size());
    if (octaves.empty())
        return results;
    std::vector<std::size_t> all(octaves.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    analyze_recursive(field.data(), field.dims(), 0, octaves, all, filter, results);
    return results;
}

double sample_variance(const CoefficientGrid& grid)
{
    if (grid.coeffs.empty())
        throw Error(ErrorCode::InsufficientData, "empty coefficient grid");
    double acc = 0.0;
    for (double c : grid.coeffs)
        acc += c * c;
    return acc / static_cast<double>(grid.coeffs.size());
}

std::vector<OctaveVector> octave_box(const OctaveVector& low, const OctaveVector& high)
{
    if (low.size() == 0 || low.size() != high.size())
        throw Error(ErrorCode::InvalidRange, "octave box bounds must be non-empty and of equal rank");
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (low[i] > high[i])
            throw Error(ErrorCode::InvalidRange, "empty octave box " + to_string(low) + ".." + to_string(high));
        if (low[i] < 1)
            throw Error(ErrorCode::InvalidRange, "octaves must be >= 1");
    }

    std::vector<OctaveVector> out;
    OctaveVector cur = low;
    while (true) {
        out.push_back(cur);
        std::size_t i = cur.size();
        while (i-- > 0) {
            if (cur.j[i] < high[i]) {
                ++cur.j[i];
                break;
            }
            cur.j[i] = low[i];
        }
        if (i == static_cast<std::size_t>(-1))
            break;
    }
    return out;
}

}  // namespace fbs::wavelet
