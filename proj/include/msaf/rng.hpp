#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace msaf {

// splitmix64 generator. Self-contained so that streams are reproducible
// across platforms and standard library versions.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n), n > 0
    uint64_t below(uint64_t n) {
        return (uint64_t)(((unsigned __int128)next_u64() * n) >> 64);
    }

    template <typename It>
    void shuffle(It first, It last) {
        for (auto i = (last - first) - 1; i > 0; --i) {
            auto j = (decltype(i))below((uint64_t)i + 1);
            std::swap(first[i], first[j]);
        }
    }
};

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = (const unsigned char*)data;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace msaf
