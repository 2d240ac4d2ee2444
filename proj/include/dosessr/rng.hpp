#pragma once

// Counter-based random bits (Philox-4x32-10, Salmon et al. 2011).
//
// Every consumer addresses the stream by (seed, hi, lo) instead of advancing
// shared state, so draws are reproducible under any parallel schedule and
// independent of how many values other code paths consumed.

#include <array>
#include <cstdint>

namespace dosessr::rng {

namespace detail {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& lo, std::uint32_t& hi) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace detail

// One Philox-4x32 block with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
    using namespace detail;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mul_hi_lo(kPhiloxM4x32A, ctr[0], lo0, hi0);
        mul_hi_lo(kPhiloxM4x32B, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW32A;
        key[1] += kPhiloxW32B;
    }
    return ctr;
}

// 64-bit mixer used to derive sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Two independent 64-bit words at counter (hi, lo) under the given seed.
inline std::array<std::uint64_t, 2> philox_u64x2(std::uint64_t seed, std::uint64_t hi,
                                                 std::uint64_t lo) noexcept {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
        static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox4x32(ctr, key);
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
            (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

inline std::uint64_t philox_u64(std::uint64_t seed, std::uint64_t hi,
                                std::uint64_t lo) noexcept {
    return philox_u64x2(seed, hi, lo)[0];
}

// Map 64 random bits to the open interval (0, 1); both endpoints excluded so
// the value is always a valid normal-quantile argument.
inline double u64_to_open_unit(std::uint64_t v) noexcept {
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_open(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo) noexcept {
    return u64_to_open_unit(philox_u64(seed, hi, lo));
}

}  // namespace dosessr::rng
