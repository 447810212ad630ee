#pragma once

#include <cstdint>
#include <random>

namespace strategiciv {

/// Purpose tags separating the independent sub-streams drawn within one
/// simulation round.  Rule draws never share a stream with agent draws,
/// which keeps the deployed rules independent of agent types by
/// construction.
enum class StreamPurpose : std::uint64_t {
    Group = 1,
    Baseline = 2,
    EffortNoise = 3,
    Offset = 4,
    Rule = 5,
    MonteCarlo = 6,
    PairFirst = 7,
    PairSecond = 8,
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Domain-separation constant folded into every stream key so that this
/// library's streams never collide with other SplitMix64 users of the
/// same seeds.
inline constexpr std::uint64_t kStreamDomain = 0x910a2dec89025cc1ULL;

/// Splittable counter-free random stream.  The stream key is derived by
/// mixing (seed, round-index, purpose-tag) through SplitMix64, so every
/// (round, purpose) pair owns an independent sub-stream of the master
/// seed and rounds can be generated in any order or in parallel.  No
/// global state.
class RngStream {
  public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t round, StreamPurpose purpose)
        : state_(detail::mix64(detail::mix64(detail::mix64(seed ^ kStreamDomain) ^ round) ^
                               static_cast<std::uint64_t>(purpose))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// One N(mean, stddev^2) draw.  A fresh distribution object per call
    /// keeps the draw a pure function of the stream position.
    double normal(double mean, double stddev) {
        std::normal_distribution<double> dist(mean, stddev);
        return dist(*this);
    }

    /// One U[0,1) draw.
    double uniform01() {
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        return dist(*this);
    }

  private:
    std::uint64_t state_;
};

}  // namespace strategiciv
