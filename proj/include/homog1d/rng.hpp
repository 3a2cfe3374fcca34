#pragma once

// Deterministic random number machinery.
//
// Every stochastic object in the library draws from a seed derived by a
// counter scheme from a single master seed, so that results are bit-identical
// for a given (config, seed) pair no matter how work is scheduled across
// threads.  Derivation uses the splitmix64 finalizer as a mixing function;
// bulk generation uses xoshiro256++ plus a ziggurat normal sampler.

#include <cstdint>

namespace homog {

// splitmix64 finalizer: bijective avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child seed from a parent seed and one or more counters.
// derive_seed(s, a, b) == derive_seed(derive_seed(s, a), b).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter) {
    return mix64(parent ^ mix64(counter ^ 0x6a09e667f3bcc909ULL));
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter, Rest... rest) {
    return derive_seed(derive_seed(parent, counter), rest...);
}

// Fixed stream tags keeping unrelated consumers of the same master seed apart.
namespace seed_stream {
inline constexpr std::uint64_t environment = 0x01;
inline constexpr std::uint64_t path        = 0x02;
inline constexpr std::uint64_t noise       = 0x03;
inline constexpr std::uint64_t estimator   = 0x04;
inline constexpr std::uint64_t scratch     = 0x05;
}  // namespace seed_stream

// xoshiro256++ (Blackman & Vigna, public domain reference implementation).
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        // Expand the seed through splitmix64 as recommended by the authors.
        std::uint64_t x = seed;
        for (auto& word : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            word = mix64(x);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

namespace detail {
// Ziggurat tables (Marsaglia & Tsang 2000, 128 layers).  Singleton built at
// load time from the published tail abscissa and layer area.
struct ZigguratTables {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];
    ZigguratTables();
};
extern const ZigguratTables zig_tables;
}  // namespace detail

// Standard normal sampler: 128-layer ziggurat over a xoshiro256++ engine.
// A few ns per draw, which matters because the diffusion paths consume one
// draw per Euler step.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        const auto& t = detail::zig_tables;
        const std::int32_t hz =
            static_cast<std::int32_t>(engine_() & 0xffffffffu);
        const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
        const std::uint32_t mag = static_cast<std::uint32_t>(
            hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
        if (mag < t.kn[iz]) return hz * t.wn[iz];
        return fix(hz, iz);
    }

    Xoshiro256pp& engine() { return engine_; }

  private:
    double fix(std::int32_t hz, std::uint32_t iz);

    Xoshiro256pp engine_;
};

// Standard normal value addressed by (seed, counter): evaluation order and
// window layout do not affect the result.  Used for the lattice weights of
// random environments, where overlapping windows must agree pointwise.
double counter_gaussian(std::uint64_t seed, std::int64_t counter);

}  // namespace homog
