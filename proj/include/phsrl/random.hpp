#pragma once

#include <cstddef>
#include <cstdint>

namespace phsrl {

/// Counter-based pseudorandom stream (SplitMix64 over seed + counter).
///
/// Draw k of a stream depends only on (seed, k), so two streams built from the
/// same seed stay aligned as long as they consume the same number of ticks.
/// Every helper below consumes exactly one tick.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform on {0, ..., n-1}; n must be positive.
    std::size_t index(std::size_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    /// Independent child stream, e.g. one per Monte Carlo replication.
    RandomStream fork(std::uint64_t stream_id) const;

    bool operator==(const RandomStream&) const = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// The exploration source every agent holds a copy of.
using SharedRandomSource = RandomStream;

} // namespace phsrl
