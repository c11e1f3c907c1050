#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "normal.hpp"

namespace hybridfx {

inline constexpr std::string_view kRngAlgorithm = "xoshiro256**";
inline constexpr std::string_view kRngVersion = "1.0 (splitmix64 seeding, AS241 inverse-CDF normals)";

/// xoshiro256** 1.0 (Blackman & Vigna), period 2^256 - 1.
///
/// The 256-bit state is filled from the 64-bit seed with splitmix64, so any
/// seed (including 0) gives a valid nonzero state. Same seed, same stream.
class Xoshiro256StarStar {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256StarStar(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    /// Raw state constructor (reference vectors, replay).
    static Xoshiro256StarStar from_state(const std::array<std::uint64_t, 4>& state) noexcept {
        Xoshiro256StarStar g(0);
        g.state_ = state;
        return g;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    friend bool operator==(const Xoshiro256StarStar&, const Xoshiro256StarStar&) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    static constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Seeded random stream. Single owner; copy it only to fork an identical
/// replay. Parallel work uses distinct seeds (seed, seed + 1, ...).
class RngState {
public:
    explicit RngState(std::uint64_t seed) noexcept : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on the open interval (0, 1): 53-bit grid shifted by half a step.
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal from exactly one uniform (inverse-CDF method).
    double normal() noexcept { return inverse_normal_cdf(uniform()); }

    std::uint64_t next_u64() noexcept { return engine_(); }

    friend bool operator==(const RngState&, const RngState&) = default;

private:
    std::uint64_t seed_;
    Xoshiro256StarStar engine_;
};

}  // namespace hybridfx
