#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace psdoflow::rng {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash of a (key, a, b, c) tuple. Distinct tuples give independent-looking words.
[[nodiscard]] constexpr std::uint64_t hash(std::uint64_t key, std::uint64_t a,
                                           std::uint64_t b, std::uint64_t c) noexcept {
    std::uint64_t h = mix64(key);
    h = mix64(h ^ a);
    h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (c + 0x85157af5ULL));
    return h;
}

/// Uniform double in (0, 1) from the top 53 bits.
[[nodiscard]] constexpr double to_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw that is a pure function of the counter tuple
/// (Box-Muller on two hashed uniforms).
[[nodiscard]] inline double gaussian(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) noexcept {
    const std::uint64_t h1 = hash(key, a, b, 2 * c);
    const std::uint64_t h2 = hash(key, a, b, 2 * c + 1);
    const double u1 = to_unit(h1);
    const double u2 = to_unit(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace psdoflow::rng
