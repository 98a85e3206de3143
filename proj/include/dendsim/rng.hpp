#pragma once

#include <cstdint>
#include <string_view>

namespace dendsim {

// =============================================================================
// Deterministic RNG
// =============================================================================
// Hand-rolled xoshiro256++ seeded through splitmix64. The standard library
// distributions are implementation-defined, so everything here is explicit:
// the same seed produces the same stream on every platform, which is what
// makes grown topologies reproducible and comparable across reimplementations.
// =============================================================================

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the xoshiro state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of entropy.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return next_u64() % n;
    }

    bool bernoulli(double p) {
        return uniform01() < p;
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
};

/// FNV-1a over a byte string; used for sub-stream derivation and file hashing.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive an independent sub-stream from a global seed. Every consumer of
/// randomness names its purpose so streams never collide or alias.
inline Rng derive_rng(std::uint64_t global_seed, std::string_view purpose, std::uint64_t index = 0) {
    std::uint64_t h = fnv1a(purpose);
    h ^= global_seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= index * 0xd1342543de82ef95ULL;
    return Rng(h);
}

} // namespace dendsim
