#pragma once

#include "fbs/core.hpp"

#include <filesystem>
#include <iosfwd>

namespace fbs::harness {

/// Binary field container, all integers and floats little-endian:
///   "FBS1" | u8 d | d x u64 dims | d x f64 Hurst truth (NaN if absent) | f64 data, row-major
inline constexpr std::size_t field_header_size(std::size_t d) { return 4 + 1 + 16 * d; }

void write_field(const Field& field, std::ostream& out);
Field read_field(std::istream& in);

void save_field(const Field& field, const std::filesystem::path& path);
Field load_field(const std::filesystem::path& path);

}  // namespace fbs::harness
