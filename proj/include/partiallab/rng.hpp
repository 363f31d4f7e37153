#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace partiallab {

/// Deterministic splitmix64 generator. The stream is fully specified by the
/// algorithm below, so any implementation that follows it reproduces the same
/// draws for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per draw.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from (seed, tag); one splitmix64 step
/// over the xor keeps derived streams decorrelated from the base stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    Rng r(seed ^ (tag * 0x9E3779B97F4A7C15ULL));
    return r.next_u64();
}

namespace seed_tag {
// Fixed stream tags so every subsystem draws from its own stream.
inline constexpr std::uint64_t kDataGen = 0xDA7A;
inline constexpr std::uint64_t kMask = 0x3A5C;
inline constexpr std::uint64_t kInit = 0x1217;
inline constexpr std::uint64_t kBatch = 0xBA7C;
inline constexpr std::uint64_t kTestSplit = 0x7E57;
}  // namespace seed_tag

}  // namespace partiallab
