#include "fbs/field_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace fbs::harness {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'B', 'S', '1'};
constexpr std::size_t kMaxRank = 16;

void put_u64(std::ostream& out, std::uint64_t v)
{
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b.data()), 8);
}

void put_f64(std::ostream& out, double x)
{
    put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::uint64_t get_u64(std::istream& in)
{
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), 8);
    if (in.gcount() != 8)
        throw Error(ErrorCode::FormatTruncated, "field file ends inside the header or data");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in)
{
    return std::bit_cast<double>(get_u64(in));
}

}  // namespace

void write_field(const Field& field, std::ostream& out)
{
    const std::size_t d = field.rank();
    if (d == 0 || d > kMaxRank)
        throw Error(ErrorCode::InvalidArgument, "field rank must be 1..16 to be serialized");
    out.write(kMagic.data(), kMagic.size());
    out.put(static_cast<char>(d));
    for (std::size_t t : field.dims())
        put_u64(out, t);
    const auto& truth = field.hurst_truth();
    for (std::size_t i = 0; i < d; ++i)
        put_f64(out, truth ? (*truth)[i] : std::numeric_limits<double>::quiet_NaN());
    for (double x : field.data())
        put_f64(out, x);
    if (!out)
        throw Error(ErrorCode::Io, "failed writing field");
}

Field read_field(std::istream& in)
{
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4)
        throw Error(ErrorCode::FormatTruncated, "field file shorter than its magic number");
    if (magic != kMagic)
        throw Error(ErrorCode::FormatMagic, "not a field file (bad magic)");
    const int rank = in.get();
    if (rank == std::char_traits<char>::eof())
        throw Error(ErrorCode::FormatTruncated, "field file ends before its rank");
    const auto d = static_cast<std::size_t>(rank);
    if (d == 0 || d > kMaxRank)
        throw Error(ErrorCode::FormatDimensionOverflow, "field rank must be 1..16");

    Shape dims(d);
    std::size_t total = 1;
    for (auto& t : dims) {
        const std::uint64_t v = get_u64(in);
        if (v < 2)
            throw Error(ErrorCode::FormatDimensionOverflow, "field axis shorter than 2 samples");
        if (v > std::numeric_limits<std::size_t>::max() / sizeof(double) / total)
            throw Error(ErrorCode::FormatDimensionOverflow, "field dimensions overflow");
        t = static_cast<std::size_t>(v);
        total *= t;
    }

    std::vector<double> truth(d);
    bool any_truth = false;
    for (auto& h : truth) {
        h = get_f64(in);
        any_truth |= !std::isnan(h);
    }

    std::vector<double> data(total);
    for (auto& x : data)
        x = get_f64(in);
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::FormatDimensionOverflow, "field file has trailing bytes beyond its dimensions");

    std::optional<std::vector<double>> h;
    if (any_truth)
        h = std::move(truth);
    return Field(std::move(dims), std::move(data), std::move(h));
}

void save_field(const Field& field, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_field(field, out);
}

Field load_field(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_field(in);
}

}  // namespace fbs::harness
