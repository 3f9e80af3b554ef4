#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// splitmix64 step; used both as a stream hash and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic seed derivation: one root seed plus an index path
/// (e.g. {experiment, point, repeat}) gives independent streams, so
/// parallel evaluation order cannot change any drawn number.
inline std::uint64_t mix_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = root ^ 0xd1b54a32d192ed03ull;
    (void)splitmix64(s);
    for (std::uint64_t p : path) {
        s ^= splitmix64(s) + p;
        (void)splitmix64(s);
    }
    return splitmix64(s);
}

/// mt19937_64 with explicitly specified output mappings: std:: distributions
/// are implementation-defined, these are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// 53-bit uniform in [0, 1).
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cosine branch); consumes two draws.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    /// Circular complex Gaussian with E|z|^2 = var; consumes two draws.
    cplx cnormal(double var) {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1) * var);
        return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace pnnsim
