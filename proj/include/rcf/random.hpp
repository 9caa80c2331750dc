#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rcf {

// Portable random stream. The std distributions are implementation-defined,
// so every variate here is derived from raw mt19937_64 output with fixed
// formulas; a seed produces the same numbers on any conforming toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

    /// Failures before the first success of a Bernoulli(p) sequence.
    std::uint64_t geometric(double p);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// splitmix64 mix of (base, stream); used where independent sub-streams are needed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace rcf
