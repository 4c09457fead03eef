#pragma once

#include <cstdint>

namespace dured {

/// Deterministic, implementation-pinned random stream (splitmix64 core).
/// Every stochastic routine in the library draws from this generator so
/// that identical seeds reproduce identical bytes on disk, independent of
/// the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; second value cached.
    double next_normal();

    /// Uniform integer in [lo, hi] inclusive.
    int next_int(int lo, int hi);

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Derives an independent substream seed; used to decouple e.g. the
/// per-epoch augmentation stream from the weight-init stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace dured
