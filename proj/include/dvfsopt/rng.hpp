#ifndef DVFSOPT_RNG_HPP
#define DVFSOPT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace dvfsopt {

/**
 * Portable seeded random source.
 *
 * The bit generator is std::mt19937_64, whose output sequence is fixed by the
 * C++ standard (the 10000th output of a default-seeded engine is
 * 9981545732273789042). The standard distributions are NOT portable, so every
 * transform used by the library is defined here:
 *
 *  - uniform01():     (x >> 11) * 2^-53, a double in [0, 1)
 *  - below(n):        rejection sampling on the top bits, unbiased in [0, n)
 *  - exponential(m):  -m * log1p(-uniform01())
 *  - normal():        Box-Muller on two uniform01() draws, cosine branch only
 *
 * Traces written by the library carry the generator name `mt19937_64`.
 */
class Rng {
  public:
    static constexpr const char* name = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    auto next_u64() -> std::uint64_t { return engine_(); }

    auto uniform01() -> double { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    auto below(std::uint64_t n) -> std::uint64_t
    {
        // Lemire-free rejection: discard the biased tail of the 64-bit range.
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

    /// Uniform integer in [lo, hi].
    auto between(std::int64_t lo, std::int64_t hi) -> std::int64_t
    {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    auto bernoulli(double p) -> bool { return uniform01() < p; }

    auto exponential(double mean) -> double { return -mean * std::log1p(-uniform01()); }

    auto normal() -> double
    {
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace dvfsopt

#endif
