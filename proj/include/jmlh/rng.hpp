#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace jmlh {

/// Seeded SplitMix64 stream. The only randomness source in the library.
///
/// All derived draws (uniform reals, bounded integers, normals) are computed
/// here with fixed arithmetic so a seed reproduces the same sequence on any
/// standard library implementation.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept {
        // Lemire's multiply-shift with rejection of the biased low range.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * bound;
            if (static_cast<std::uint64_t>(product) >= threshold) {
                return static_cast<std::uint64_t>(product >> 64);
            }
        }
    }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent child stream, used to give each experiment stage its own sequence.
    RngStream fork() noexcept { return RngStream(next_u64()); }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

}  // namespace jmlh
