#include "capinfer/rng.hpp"

#include <cmath>

namespace capinfer {

std::uint64_t mix64(std::uint64_t x) {
    // SplitMix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t salt) {
    return mix64(base ^ mix64(salt));
}

std::uint64_t substream_seed(std::uint64_t base, std::string_view salt) {
    return substream_seed(base, hash_string(salt));
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = next();
        if (x >= threshold) return x % n;
    }
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586477 * u2);
}

}  // namespace capinfer
