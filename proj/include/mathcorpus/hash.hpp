#pragma once

#include <cstdint>
#include <string_view>

namespace mathcorpus {

// 64-bit FNV-1a. Used for content ids and shingle hashing; must be
// stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; good enough as a bit mixer for sub-seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives a named sub-seed from the global seed so that every stage
// draws from an independent stream.
inline std::uint64_t subseed(std::uint64_t global_seed, std::string_view stage) {
    return mix64(global_seed ^ fnv1a64(stage));
}

} // namespace mathcorpus
