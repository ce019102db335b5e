#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace deepcox {

/// Seeded generator whose derived draws are identical on every platform.
///
/// The standard distributions are implementation defined, so every variate
/// here is built directly from the 64-bit Mersenne Twister output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [low, high).
    double uniform(double low, double high) { return low + (high - low) * uniform(); }

    /// Uniform integer on [0, n). Rejection sampling keeps it unbiased.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return static_cast<std::size_t>(draw % bound);
    }

    /// Uniform integer on the closed range [low, high].
    int integer(int low, int high) {
        return low + static_cast<int>(index(static_cast<std::size_t>(high - low) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Exponential with the given mean via the inverse CDF.
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& values) { shuffle(std::span<T>(values)); }

private:
    std::mt19937_64 engine_;
};

/// Independent child seed for stream `stream` of a master seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace deepcox
