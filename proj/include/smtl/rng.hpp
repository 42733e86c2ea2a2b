#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace smtl {

/// splitmix64 step; used to derive independent stream seeds from a base seed
/// plus an index (replicate, fold, task) without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x100000001b3ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

/// s distinct values from {0,...,n-1} via partial Fisher-Yates, returned sorted.
inline std::vector<int> sample_without_replacement(int n, int s,
                                                   std::mt19937_64& rng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < s; ++i) {
        std::uniform_int_distribution<int> dist(i, n - 1);
        std::swap(pool[i], pool[dist(rng)]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + s);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace smtl
