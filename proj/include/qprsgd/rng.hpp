// Counter-based keyed random streams. Every stochastic draw in the simulator
// is keyed by a tag tuple (e.g. worker, round, step, purpose), never by
// execution order, so any scheduling of the work replays identical draws.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace qprsgd {

namespace detail {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Stream purposes, folded into the key so that e.g. minibatch sampling and
// quantization never share draws.
enum class StreamPurpose : std::uint64_t {
    data_gen = 1,
    minibatch = 2,
    quantize = 3,
    probe = 4,
    init = 5,
};

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(detail::mix64(seed)) {}

    Rng(std::uint64_t base_seed, std::initializer_list<std::uint64_t> tags)
        : state_(base_seed) {
        for (auto t : tags) state_ = detail::mix64(state_ ^ (t + 0x632be59bd9b4e019ULL));
        state_ = detail::mix64(state_);
    }

    std::uint64_t next_u64() {
        counter_ += 1;
        return detail::mix64(state_ ^ counter_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; hand rolled so results do not depend on the standard
    // library's distribution implementation.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Modulo bias is negligible for the n used here (sample counts, ids).
        return next_u64() % n;
    }

  private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

// Derive a child stream for a tagged sub-task of a base seed.
inline Rng derive_rng(std::uint64_t base_seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(base_seed, tags);
}

}  // namespace qprsgd
