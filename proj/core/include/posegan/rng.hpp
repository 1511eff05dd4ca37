#pragma once

#include <cstdint>
#include <string_view>

namespace posegan {

// Deterministic xoshiro256** stream. All randomness in the project flows from
// a single root seed through named sub-streams (derive_seed), so runs are
// reproducible bit-for-bit regardless of the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);
    // Standard normal via Box-Muller (no libc distribution, keeps streams
    // portable).
    double normal();
    double normal(double mean, double stddev);

private:
    std::uint64_t s_[4];
};

// Hash a stream name into the root seed so each module gets an independent
// deterministic stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream_name);

} // namespace posegan
