#include "fbs/wavelet.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <string>

namespace fbs::wavelet {

namespace {

using cplx = std::complex<long double>;

long double binomial(int n, int k)
{
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

cplx eval_poly(const std::vector<long double>& coeffs, cplx x)
{
    cplx acc = 0.0L;
    for (std::size_t i = coeffs.size(); i-- > 0;)
        acc = acc * x + coeffs[i];
    return acc;
}

// Roots of sum_k C(N-1+k, k) y^k via the companion matrix, polished by Newton
// in extended precision.
std::vector<cplx> bezout_roots(int order)
{
    const int degree = order - 1;
    std::vector<long double> coeffs(degree + 1);
    for (int k = 0; k <= degree; ++k)
        coeffs[k] = binomial(order - 1 + k, k);

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int i = 1; i < degree; ++i)
        companion(i, i - 1) = 1.0;
    for (int i = 0; i < degree; ++i)
        companion(i, degree - 1) = -static_cast<double>(coeffs[i] / coeffs[degree]);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    std::vector<long double> deriv(degree);
    for (int k = 1; k <= degree; ++k)
        deriv[k - 1] = k * coeffs[k];

    std::vector<cplx> roots;
    for (int i = 0; i < degree; ++i) {
        const auto ev = solver.eigenvalues()[i];
        cplx y(ev.real(), ev.imag());
        for (int it = 0; it < 50; ++it) {
            const cplx step = eval_poly(coeffs, y) / eval_poly(deriv, y);
            y -= step;
            if (std::abs(step) < 1e-18L * (1.0L + std::abs(y)))
                break;
        }
        roots.push_back(y);
    }
    return roots;
}

WaveletFilter build(int order)
{
    WaveletFilter f;
    f.order = order;
    const int len = 2 * order;

    // Polynomial in z, increasing powers: ((1+z)/2)^N * prod (z - z_r) over
    // the roots of the Bezout factor mapped through y = (2 - z - 1/z)/4 and
    // taken inside the unit circle.
    std::vector<cplx> poly{1.0L};
    auto multiply = [&poly](cplx c0, cplx c1) {
        std::vector<cplx> out(poly.size() + 1, 0.0L);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            out[i] += poly[i] * c0;
            out[i + 1] += poly[i] * c1;
        }
        poly = std::move(out);
    };
    for (int i = 0; i < order; ++i)
        multiply(0.5L, 0.5L);
    if (order > 1) {
        for (const cplx& y : bezout_roots(order)) {
            const cplx b = 1.0L - 2.0L * y;
            const cplx disc = std::sqrt(b * b - 1.0L);
            cplx z = b - disc;
            if (std::abs(z) > 1.0L)
                z = b + disc;
            multiply(-z, 1.0L);
        }
    }

    long double sum = 0.0L;
    for (const cplx& c : poly)
        sum += c.real();
    const long double scale = std::sqrt(2.0L) / sum;

    // Reversed so the filter starts with its largest-energy taps (the
    // classical Daubechies ordering).
    f.lowpass.resize(len);
    for (int k = 0; k < len; ++k)
        f.lowpass[k] = static_cast<double>(poly[len - 1 - k].real() * scale);

    f.highpass.resize(len);
    for (int k = 0; k < len; ++k)
        f.highpass[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lowpass[len - 1 - k];
    return f;
}

const std::array<WaveletFilter, kMaxDaubechiesOrder>& table()
{
    static const auto filters = [] {
        std::array<WaveletFilter, kMaxDaubechiesOrder> out;
        for (int n = 1; n <= kMaxDaubechiesOrder; ++n)
            out[n - 1] = build(n);
        return out;
    }();
    return filters;
}

}  // namespace

const WaveletFilter& daubechies(int order)
{
    if (order < 1 || order > kMaxDaubechiesOrder)
        throw Error(ErrorCode::UnsupportedOrder,
                    "Daubechies order " + std::to_string(order) + " outside 1.." + std::to_string(kMaxDaubechiesOrder));
    return table()[order - 1];
}

WaveletFilter make_daubechies(int order)
{
    return daubechies(order);
}

}  // namespace fbs::wavelet
