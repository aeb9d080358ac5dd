#ifndef SFDE_RNG_HPP
#define SFDE_RNG_HPP

#include <cstdint>
#include <random>

namespace sfde {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's public-domain constants).
// Used as a stateless mixer to derive independent substream keys from a
// master seed, so Monte-Carlo path p always sees the same stream no matter
// which thread picks it up.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Key for substream `index` of stream `seed`. Counter-based: no state is
// shared between substreams, so reductions can be order-independent.
inline std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index = 0) {
    return std::mt19937_64(substream_key(seed, index));
}

}  // namespace sfde

#endif
