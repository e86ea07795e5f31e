#pragma once

#include <cstdint>

namespace mspec {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ splitmix64(v));
}

// Counter-based stream: variate i of stream `key` is splitmix64(key + i * golden),
// so a stream is fully described by (key, counter) and substreams never interact.
class RngStream {
  public:
    RngStream() = default;
    explicit RngStream(std::uint64_t key) : key_(key) {}

    // independent substream for (seed, index), e.g. one per path
    static RngStream derive(std::uint64_t seed, std::uint64_t index) {
        return RngStream(hash_combine(splitmix64(seed), index));
    }

    std::uint64_t next_u64() {
        return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++);
    }

    // uniform in [0, 1) with 53 bits of resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t consumed() const { return counter_; }
    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_     = 0;
    std::uint64_t counter_ = 0;
};

} // namespace mspec
