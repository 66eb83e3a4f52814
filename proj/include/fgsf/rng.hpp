#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace fgsf {

// xoshiro256++ with splitmix64 seeding. Hand-rolled so the state is four
// plain words (exact checkpoint roundtrips) and the normal draw consumes a
// fixed number of words (two) with no hidden cache.
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    // Independent named substream of a master seed.
    static Rng stream(uint64_t master_seed, std::string_view name) {
        uint64_t h = 1469598103934665603ull; // FNV-1a
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(master_seed ^ h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller (cosine branch); consumes exactly two words.
    double normal() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Uniform integer in [0, n) via multiply-shift.
    uint64_t uniform_index(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    std::array<uint64_t, 4>& state() { return state_; }
    const std::array<uint64_t, 4>& state() const { return state_; }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::array<uint64_t, 4> state_{};
};

} // namespace fgsf
