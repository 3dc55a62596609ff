#pragma once

#include <cstdint>

namespace selfnorm {

// Identifies one reproducible substream. Same (seed, stream) always yields
// the same variate sequence; distinct stream ids are independent for Monte
// Carlo purposes (counter mode over a 64-bit avalanche mix).
struct SeedStream {
    uint64_t seed = 0;
    uint64_t stream = 0;
};

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Counter-based generator: output(k) = mix(key + k*phi). Stateless apart
// from the counter, so workers can jump to any offset without touching
// shared state.
class CounterRng {
public:
    explicit CounterRng(SeedStream s)
        : key_(derive_key(s.seed, s.stream)) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(key_ + state_);
    }

    // Uniform strictly inside (0,1); safe for inverse-CDF of unbounded laws.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static uint64_t derive_key(uint64_t seed, uint64_t stream) {
        uint64_t k = mix64(seed + 0x9E3779B97F4A7C15ull);
        k = mix64(k ^ mix64(stream + 0xD1B54A32D192ED03ull));
        return k;
    }

    uint64_t key_;
    uint64_t state_ = 0;
};

// Deterministic stream-id derivation for task fan-out (hash-combine of task
// coordinates). Used as SeedStream{seed, derive_stream(...)}.
inline uint64_t derive_stream(uint64_t a) { return mix64(a + 0x9E3779B97F4A7C15ull); }
inline uint64_t derive_stream(uint64_t a, uint64_t b) {
    return mix64(derive_stream(a) ^ (b + 0x9E3779B97F4A7C15ull));
}
inline uint64_t derive_stream(uint64_t a, uint64_t b, uint64_t c) {
    return mix64(derive_stream(a, b) ^ (c + 0xD1B54A32D192ED03ull));
}
inline uint64_t derive_stream(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix64(derive_stream(a, b, c) ^ (d + 0x8CB92BA72F3D8DD7ull));
}

} // namespace selfnorm
