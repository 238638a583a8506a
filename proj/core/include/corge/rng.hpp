#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace corge::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded FNV-1a. std::hash is not stable across implementations; this is.
inline std::uint64_t hash_token(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ splitmix64(seed);
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Derive an independent stream seed from (base, index), for per-item split.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ (index + 0x632be59bd9b4e019ULL));
}

// mt19937_64 has a standardized output sequence; the draw mappings below are
// spelled out here so results do not depend on the standard library's
// distribution implementations.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Unbiased integer in [0, n) via rejection sampling.
    std::size_t below(std::size_t n) {
        if (n == 0) return 0;
        const std::uint64_t range = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % range);
    }

    // Uniform in [0, 1) from the top 53 bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace corge::rng
