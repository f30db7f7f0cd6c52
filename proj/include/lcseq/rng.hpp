#pragma once

#include <cstdint>
#include <cstring>

namespace lcseq {

// splitmix64 finalizer; used both as the generator step and to derive
// per-replication seeds from (base_seed, mu, rep).
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t double_bits(double x) {
    uint64_t b;
    std::memcpy(&b, &x, sizeof(b));
    return b;
}

// seed = base_seed ^ hash(mu, rep)
inline uint64_t derive_run_seed(uint64_t base_seed, double mu, uint64_t rep) {
    return base_seed ^ mix64(double_bits(mu) ^ mix64(rep));
}

// Counter-based generator: the whole stream is a pure function of the seed,
// so values are reproducible regardless of platform or call interleaving.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on [0, 1), 53-bit resolution
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1]; never zero, safe under log()
    double next_double_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes exactly two uniforms
    double next_normal();

private:
    uint64_t state_;
};

} // namespace lcseq
