#include "fbs/rng.hpp"
#include "fbs/synthesis.hpp"
#include "fbs/wavelet.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace fbs;
using namespace fbs::wavelet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Frozen output of tests/oracles/daubechies_oracle.py (50-digit Newton solve).
const std::vector<double> kOracleDb2{0.48296291314453414338, 0.83651630373780790558, 0.22414386804201338102,
                                     -0.12940952255126038117};
const std::vector<double> kOracleDb3{0.332670552950082616,   0.80689150931109257649,  0.4598775021184915701,
                                     -0.13501102001025458869, -0.085441273882026661697, 0.035226291885709536604};
const std::vector<double> kOracleDb4{0.23037781330889650086,   0.71484657055291564709,  0.63088076792985890788,
                                     -0.027983769416859854208, -0.18703481171909308408, 0.030841381835560763625,
                                     0.032883011666885199738,  -0.010597401785069032106};

double shifted_dot(const std::vector<double>& a, const std::vector<double>& b, int shift)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const long m = static_cast<long>(k) + shift;
        if (m >= 0 && m < static_cast<long>(b.size()))
            s += a[k] * b[static_cast<std::size_t>(m)];
    }
    return s;
}

std::vector<std::vector<double>> fbs_sheets(const std::vector<double>& h, const Shape& dims, std::size_t pairs,
                                            std::uint64_t seed)
{
    synthesis::FgnSheetSampler sampler(HurstVector(h), synthesis::noise_dims_for(dims));
    std::vector<std::vector<double>> out;
    for (std::size_t p = 0; p < pairs; ++p) {
        auto [a, b] = synthesis::sample_fbs_pair(sampler, substream_key(seed, p));
        out.emplace_back(a.data().begin(), a.data().end());
        out.emplace_back(b.data().begin(), b.data().end());
    }
    return out;
}

}  // namespace

TEST_CASE("Haar filter is forced by normalization")
{
    const auto& f = daubechies(1);
    REQUIRE(f.lowpass.size() == 2);
    CHECK_THAT(f.lowpass[0], WithinAbs(std::sqrt(0.5), 1e-15));
    CHECK_THAT(f.lowpass[1], WithinAbs(std::sqrt(0.5), 1e-15));
}

TEST_CASE("Daubechies lowpass matches the independent oracle")
{
    const std::pair<int, const std::vector<double>*> cases[] = {{2, &kOracleDb2}, {3, &kOracleDb3}, {4, &kOracleDb4}};
    for (const auto& [order, expected] : cases) {
        const auto& f = daubechies(order);
        REQUIRE(f.lowpass.size() == expected->size());
        for (std::size_t k = 0; k < expected->size(); ++k)
            CHECK_THAT(f.lowpass[k], WithinAbs((*expected)[k], 1e-12));
    }
    const double r3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
    const std::vector<double> closed{(1 + r3) / d, (3 + r3) / d, (3 - r3) / d, (1 - r3) / d};
    for (std::size_t k = 0; k < 4; ++k)
        CHECK_THAT(daubechies(2).lowpass[k], WithinAbs(closed[k], 1e-12));
}

TEST_CASE("filter invariants hold for every order")
{
    for (int n = 1; n <= kMaxDaubechiesOrder; ++n) {
        CAPTURE(n);
        const auto& f = daubechies(n);
        REQUIRE(f.length() == 2 * n);
        REQUIRE(f.lowpass.size() == static_cast<std::size_t>(2 * n));
        CHECK_THAT(std::accumulate(f.lowpass.begin(), f.lowpass.end(), 0.0), WithinAbs(std::sqrt(2.0), 1e-12));
        for (int s = 0; s < n; ++s) {
            CHECK_THAT(shifted_dot(f.lowpass, f.lowpass, 2 * s), WithinAbs(s == 0 ? 1.0 : 0.0, 1e-10));
            CHECK_THAT(shifted_dot(f.highpass, f.highpass, 2 * s), WithinAbs(s == 0 ? 1.0 : 0.0, 1e-10));
        }
        for (int s = -n + 1; s < n; ++s)
            CHECK_THAT(shifted_dot(f.lowpass, f.highpass, 2 * s), WithinAbs(0.0, 1e-10));
        for (int k = 0; k < 2 * n; ++k) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            CHECK(f.highpass[k] == sign * f.lowpass[2 * n - 1 - k]);
        }
        for (int p = 0; p < n; ++p) {
            double moment = 0.0, scale = 0.0;
            for (int k = 0; k < 2 * n; ++k) {
                moment += std::pow(k, p) * f.highpass[k];
                scale += std::pow(k, p) * std::fabs(f.highpass[k]);
            }
            CHECK(std::fabs(moment) <= 1e-8 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("unsupported orders are rejected")
{
    CHECK_THROWS_MATCHES(daubechies(0), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::UnsupportedOrder;
                         }));
    CHECK_THROWS_AS(make_daubechies(11), Error);
}

TEST_CASE("cascade table of Haar is the box wavelet")
{
    const auto t = cascade_table(daubechies(1), 4);
    REQUIRE(t.psi.size() == 17);
    for (int k = 0; k < 16; ++k)
        CHECK_THAT(t.psi[k], WithinAbs(k < 8 ? 1.0 : -1.0, 1e-12));
}

TEST_CASE("cascade table of D3 integrates to zero and has unit energy")
{
    const auto t = cascade_table(daubechies(3), 10);
    REQUIRE(t.psi.size() == 5 * 1024 + 1);
    double sum = 0.0, energy = 0.0;
    for (double v : t.psi) {
        sum += v * t.step();
        energy += v * v * t.step();
    }
    CHECK_THAT(sum, WithinAbs(0.0, 1e-6));
    CHECK_THAT(energy, WithinAbs(1.0, 1e-3));

    // Energy converges under refinement.
    const auto finer = cascade_table(daubechies(3), 12);
    double e12 = 0.0;
    for (double v : finer.psi)
        e12 += v * v * finer.step();
    CHECK(std::fabs(e12 - 1.0) <= std::fabs(energy - 1.0) + 1e-12);
    CHECK_THROWS_AS(cascade_table(daubechies(3), 0), Error);
    CHECK_THROWS_AS(cascade_table(daubechies(3), 17), Error);
}

TEST_CASE("detail_1d annihilates low-degree polynomials")
{
    std::vector<double> constant(256, 3.5);
    for (int n = 1; n <= 4; ++n)
        for (int j = 1; j <= 3; ++j)
            for (double c : detail_1d(constant, daubechies(n), j))
                CHECK_THAT(c, WithinAbs(0.0, 1e-12));

    std::vector<double> quad(512);
    for (std::size_t t = 0; t < quad.size(); ++t)
        quad[t] = static_cast<double>(t * t);
    const double scale = quad.back();
    const auto d = detail_1d(quad, daubechies(3), 2);
    REQUIRE(d.size() == available_count(512, 2, daubechies(3)));
    for (double c : d)
        CHECK(std::fabs(c) <= 1e-8 * scale);
}

TEST_CASE("detail_1d preserves white-noise variance")
{
    CounterRng rng(2024);
    std::vector<double> x(100000);
    for (double& v : x)
        v = rng.gaussian();
    const auto levels = detail_levels(x, daubechies(3), 4);
    for (int j = 1; j <= 4; ++j) {
        const auto& d = levels[j - 1];
        CHECK(d == detail_1d(x, daubechies(3), j));
        const double var = std::inner_product(d.begin(), d.end(), d.begin(), 0.0) / static_cast<double>(d.size());
        CHECK_THAT(var, WithinRel(1.0, 0.05));
    }
}

TEST_CASE("detail_1d counts and short signals")
{
    const auto& f = daubechies(3);
    CHECK(available_count(512, 3, f) == 59);
    CHECK(available_count(512, 6, f) == 3);
    CHECK(available_count(512, 7, f) == 0);
    std::vector<double> x(1000, 1.0);
    for (int j = 1; j <= 6; ++j)
        CHECK(detail_1d(x, f, j).size() == available_count(1000, j, f));
    std::vector<double> shorty(47, 1.0);
    CHECK_THROWS_MATCHES(detail_1d(shorty, f, 3), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::InsufficientData;
                         }));
}

TEST_CASE("analyze_octave counts, zero field and axis-order independence")
{
    const auto& f = daubechies(3);
    const auto zero = Field::zeros({512, 512});
    const auto g = analyze_octave(zero, f, OctaveVector{{3, 3}});
    CHECK(g.counts == std::vector<std::size_t>{59, 59});
    CHECK(g.size() == 59 * 59);
    for (double c : g.coeffs)
        CHECK(c == 0.0);
    CHECK(sample_variance(g) == 0.0);

    const auto sheets = fbs_sheets({0.4, 0.7}, {200, 160}, 1, 5);
    const Field field({200, 160}, sheets[0]);
    const Field swapped = field.swapped_axes(0, 1);
    const auto a = analyze_octave(field, f, OctaveVector{{3, 2}});
    const auto b = analyze_octave(swapped, f, OctaveVector{{2, 3}});
    REQUIRE(a.counts[0] == b.counts[1]);
    REQUIRE(a.counts[1] == b.counts[0]);
    double scale = 0.0;
    for (double c : a.coeffs)
        scale = std::max(scale, std::fabs(c));
    for (std::size_t r = 0; r < a.counts[0]; ++r)
        for (std::size_t c = 0; c < a.counts[1]; ++c)
            CHECK(std::fabs(a.coeffs[r * a.counts[1] + c] - b.coeffs[c * b.counts[1] + r]) <= 1e-10 * scale);

    const std::vector<OctaveVector> box = octave_box(OctaveVector{{2, 2}}, OctaveVector{{3, 4}});
    const auto shared = analyze_octaves(field, f, box);
    REQUIRE(shared.size() == box.size());
    for (std::size_t i = 0; i < box.size(); ++i)
        CHECK(shared[i].coeffs == analyze_octave(field, f, box[i]).coeffs);
}

TEST_CASE("polynomial fields produce zero coefficient grids")
{
    for (int n = 1; n <= 3; ++n) {
        CAPTURE(n);
        const Shape dims{96, 80};
        std::vector<double> data(96 * 80);
        double scale = 0.0;
        for (std::size_t r = 0; r < 96; ++r)
            for (std::size_t c = 0; c < 80; ++c) {
                const double x = static_cast<double>(r), y = static_cast<double>(c);
                // Per-axis degree n-1.
                const double v = std::pow(x, n - 1) * (1.0 + std::pow(y, n - 1)) + 2.0 * std::pow(y, n - 1);
                data[r * 80 + c] = v;
                scale = std::max(scale, std::fabs(v));
            }
        const Field field(dims, data);
        for (const auto& o : octave_box(OctaveVector{{1, 1}}, OctaveVector{{2, 2}}))
            for (double c : analyze_octave(field, daubechies(n), o).coeffs)
                CHECK(std::fabs(c) <= 1e-8 * scale);
    }
}

TEST_CASE("sample_variance basics")
{
    CoefficientGrid g;
    g.octave = OctaveVector{{1}};
    g.counts = {4};
    g.coeffs = {1, -1, 1, -1};
    CHECK(sample_variance(g) == 1.0);
    g.coeffs.clear();
    CHECK_THROWS_AS(sample_variance(g), Error);
}

TEST_CASE("octave_box enumerates lexicographically")
{
    const auto box = octave_box(OctaveVector{{3, 3}}, OctaveVector{{4, 4}});
    const std::vector<OctaveVector> expected{{{3, 3}}, {{3, 4}}, {{4, 3}}, {{4, 4}}};
    CHECK(box == expected);
    const auto line = octave_box(OctaveVector{{3}}, OctaveVector{{6}});
    CHECK(line == std::vector<OctaveVector>{{{3}}, {{4}}, {{5}}, {{6}}});
    CHECK(octave_box(OctaveVector{{3, 3, 3}}, OctaveVector{{4, 4, 4}}).size() == 8);
    CHECK_THROWS_MATCHES(octave_box(OctaveVector{{4}}, OctaveVector{{3}}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::InvalidRange;
                         }));
}

TEST_CASE("scaling law between neighbouring octaves on synthesized sheets")
{
    const auto& f = daubechies(3);
    const Shape dims{512, 512};
    const auto sheets = fbs_sheets({0.8, 0.8}, dims, 50, 77);
    double ratio = 0.0;
    for (const auto& s : sheets) {
        const Field field(dims, s);
        ratio += sample_variance(analyze_octave(field, f, OctaveVector{{4, 4}})) /
                 sample_variance(analyze_octave(field, f, OctaveVector{{3, 3}}));
    }
    ratio /= static_cast<double>(sheets.size());
    CHECK_THAT(ratio, WithinRel(std::pow(2.0, 5.2), 0.2));

    const auto half = fbs_sheets({0.5, 0.5}, dims, 50, 78);
    double slope = 0.0;
    for (const auto& s : half) {
        const Field field(dims, s);
        slope += std::log2(sample_variance(analyze_octave(field, f, OctaveVector{{4, 3}}))) -
                 std::log2(sample_variance(analyze_octave(field, f, OctaveVector{{3, 3}})));
    }
    slope /= static_cast<double>(half.size());
    CHECK_THAT(slope, WithinAbs(2.0, 0.2));
}

TEST_CASE("coefficients have zero mean and translation-invariant distribution")
{
    const auto& f = daubechies(3);
    const Shape dims{256, 256};
    const auto sheets = fbs_sheets({0.6, 0.7}, dims, 50, 91);
    const OctaveVector j{{3, 3}};

    std::vector<double> rep_mean, left_var, right_var;
    for (const auto& s : sheets) {
        const auto g = analyze_octave(Field(dims, s), f, j);
        const std::size_t rows = g.counts[0], cols = g.counts[1];
        double m = 0.0, vl = 0.0, vr = 0.0;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const double v = g.coeffs[r * cols + c];
                m += v;
                (r < rows / 2 ? vl : vr) += v * v;
            }
        rep_mean.push_back(m / static_cast<double>(g.size()));
        left_var.push_back(vl / static_cast<double>((rows / 2) * cols));
        right_var.push_back(vr / static_cast<double>((rows - rows / 2) * cols));
    }
    auto mean_se = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v)
            ss += (x - m) * (x - m);
        return std::pair{m, std::sqrt(ss / (n - 1) / n)};
    };
    const auto [mu, se] = mean_se(rep_mean);
    CHECK(std::fabs(mu) <= 3.0 * se);

    std::vector<double> diff(left_var.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = left_var[i] - right_var[i];
    const auto [dm, dse] = mean_se(diff);
    CHECK(std::fabs(dm) <= 3.0 * dse);
}
