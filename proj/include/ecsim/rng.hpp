#pragma once

// Counter-based deterministic RNG. All randomness in a run flows from one
// root seed; modules draw from substreams derived by fixed string labels,
// so adding draws in one module never shifts another module's stream.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ecsim {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : root_(seed), state_(seed) {
        // decorrelate trivially related seeds
        detail::splitmix64(state_);
    }

    // Independent substream tied to the root seed and a fixed label.
    Rng derive(std::string_view label, std::uint64_t index = 0) const {
        std::uint64_t s = root_ ^ (detail::fnv1a64(label) + 0x9e3779b97f4a7c15ULL * (index + 1));
        return Rng(s);
    }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // uniform in [0,1) with 53-bit resolution
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via Box-Muller (two uniforms per draw, no cached spare)
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        // rejection to kill modulo bias
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    std::uint64_t root_seed() const { return root_; }

  private:
    std::uint64_t root_;
    std::uint64_t state_;
};

} // namespace ecsim
