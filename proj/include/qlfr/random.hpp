#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace qlfr::rng {

/// splitmix64 step; used to derive independent stream seeds from one seed.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + 1));
}

/// Unbiased draw in [0, bound). Portable, unlike std::uniform_int_distribution.
inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do {
        r = gen();
    } while (r >= limit);
    return r % bound;
}

/// Moves k uniformly chosen elements to the front (partial Fisher-Yates).
template <class T>
void partial_shuffle(std::vector<T>& v, std::size_t k, std::mt19937_64& gen) {
    for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
        auto j = i + static_cast<std::size_t>(below(gen, v.size() - i));
        using std::swap;
        swap(v[i], v[j]);
    }
}

}  // namespace qlfr::rng
