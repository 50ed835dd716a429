#include "phsrl/random.hpp"

#include <stdexcept>

namespace phsrl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t RandomStream::next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * kGolden);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::index: empty range");
    // multiply-shift; bias is below 2^-60 for the small ranges used here
    const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

RandomStream RandomStream::fork(std::uint64_t stream_id) const {
    return RandomStream(mix(seed_ ^ mix(stream_id + kGolden)));
}

} // namespace phsrl
