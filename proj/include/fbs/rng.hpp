#pragma once

#include <cstdint>

namespace fbs {

/// Counter-based random stream.
///
/// Draw n is the SplitMix64 finalizer applied to base + n * gamma, where base
/// is the finalized stream key. Streams are cheap to create, so every
/// replicate gets its own; see substream_key().
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;

    /// Standard normal via the Box-Muller transform (pairs are cached).
    double gaussian() noexcept;

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;

/// Key for replicate `index` of an experiment seeded with `seed`.
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) noexcept
{
    return seed ^ index;
}

}  // namespace fbs
