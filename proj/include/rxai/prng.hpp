#pragma once

#include <cstdint>

namespace rxai {

// SplitMix64 stream. Reference-model weights and synthetic inputs are drawn
// from this generator so that (seed, preset) -> bit-identical values on every
// platform; std::uniform_real_distribution is implementation-defined and
// cannot give that guarantee.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 24 mantissa bits, exactly representable in float.
    float next_unit() {
        return static_cast<float>(next() >> 40) * (1.0f / 16777216.0f);
    }

    // Uniform in [-limit, limit).
    float next_symmetric(float limit) {
        return (2.0f * next_unit() - 1.0f) * limit;
    }
};

} // namespace rxai
