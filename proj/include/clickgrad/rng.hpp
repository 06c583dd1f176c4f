#ifndef CLICKGRAD_RNG_HPP
#define CLICKGRAD_RNG_HPP

#include <cstdint>

namespace clickgrad {

/// splitmix64 step; also used to derive independent stream seeds.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro-free minimal generator: splitmix64 iterated. Output quality is
// ample for click simulation and shuffling, and the stream is identical
// across platforms, which the determinism contract depends on.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    /// Independent substream for e.g. one session: mixes the parent seed
    /// with the stream index so threading and batch layout cannot change
    /// the draws.
    static Rng substream(uint64_t seed, uint64_t index) {
        uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
        splitmix64(s);
        return Rng(s);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant here.
    uint64_t uniform_int(uint64_t n) { return n ? next_u64() % n : 0; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    uint64_t state_;
};

}  // namespace clickgrad

#endif
