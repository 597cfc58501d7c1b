#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace capinfer {

// Seedable, splittable randomness. Every stochastic operation in the library
// takes an explicit 64-bit seed and derives independent substreams from it via
// substream_seed(), so results replay exactly regardless of execution order or
// thread count. The uniform/normal transforms are hand-rolled on top of the
// raw 64-bit stream (std::*_distribution output is implementation-defined and
// would break golden files across standard libraries).

std::uint64_t mix64(std::uint64_t x);

std::uint64_t hash_string(std::string_view s);  // FNV-1a 64

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t salt);
std::uint64_t substream_seed(std::uint64_t base, std::string_view salt);

template <typename... Rest>
std::uint64_t substream_seed(std::uint64_t base, std::uint64_t salt, Rest... rest) {
    return substream_seed(substream_seed(base, salt), rest...);
}
template <typename... Rest>
std::uint64_t substream_seed(std::uint64_t base, std::string_view salt, Rest... rest) {
    return substream_seed(substream_seed(base, salt), rest...);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller. Stateless between calls: both uniforms
    // are drawn fresh each time so the draw sequence does not depend on the
    // history of calls.
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace capinfer
