// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace riskdrift {

using Seed = std::uint64_t;

/**
 * Counter-based normal generator.
 *
 * Every draw is a pure function of (seed, stream, counter), so paths can be
 * generated in any order or on any number of threads and still reproduce
 * bit-for-bit. The mixer is SplitMix64 applied to a combined key; normals
 * come from Box-Muller on two derived uniforms. std::normal_distribution is
 * avoided because its output is implementation-defined.
 */
class CounterRng {
public:
    explicit constexpr CounterRng(Seed seed) : seed_(seed) {}

    [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter,
                                               std::uint64_t lane = 0) const {
        std::uint64_t k = mix(seed_ ^ 0x6a09e667f3bcc909ULL);
        k = mix(k ^ stream);
        k = mix(k ^ counter);
        return mix(k ^ lane);
    }

    /// Uniform on the open interval (0, 1).
    [[nodiscard]] double uniform(std::uint64_t stream, std::uint64_t counter,
                                 std::uint64_t lane = 0) const {
        return (static_cast<double>(bits(stream, counter, lane) >> 11) + 0.5) * 0x1.0p-53;
    }

    [[nodiscard]] double normal(std::uint64_t stream, std::uint64_t counter,
                                std::uint64_t lane = 0) const {
        const double u1 = uniform(stream, counter, 2 * lane);
        const double u2 = uniform(stream, counter, 2 * lane + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] constexpr Seed seed() const { return seed_; }

private:
    Seed seed_;
};

} // namespace riskdrift
