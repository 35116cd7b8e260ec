#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mathcorpus/hash.hpp"

namespace mathcorpus {

/// Parameters shared by dedup and decontamination.
struct OverlapParams {
    std::size_t shingle_width = 16;        // bytes
    std::size_t permutation_count = 128;
    std::size_t band_count = 16;
    std::size_t rows_per_band = 8;
    std::size_t dedup_threshold_bytes = 2048;
    std::size_t decontam_threshold_bytes = 100;
    double jaccard_candidate_threshold = 0.8;
    std::uint64_t seed = 0;

    void validate() const {
        if (band_count * rows_per_band != permutation_count) {
            throw std::runtime_error("overlap params: band_count * rows_per_band must equal permutation_count");
        }
        if (shingle_width == 0 || dedup_threshold_bytes == 0 || decontam_threshold_bytes == 0) {
            throw std::runtime_error("overlap params: widths and thresholds must be positive");
        }
        if (jaccard_candidate_threshold < 0.0 || jaccard_candidate_threshold > 1.0) {
            throw std::runtime_error("overlap params: jaccard_candidate_threshold must be in [0,1]");
        }
    }
};

struct MinHashSignature {
    std::string doc_id;
    std::size_t permutation_count = 0;
    std::size_t shingle_width = 0;
    std::vector<std::uint64_t> values;
};

/// Hashed byte shingles of width w. Texts shorter than w contribute the
/// whole text as a single shingle.
inline std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t width) {
    std::vector<std::uint64_t> out;
    if (text.size() <= width) {
        out.push_back(fnv1a64(text));
        return out;
    }
    out.reserve(text.size() - width + 1);
    for (std::size_t i = 0; i + width <= text.size(); ++i) {
        out.push_back(fnv1a64(text.substr(i, width)));
    }
    return out;
}

inline std::unordered_set<std::uint64_t> shingle_set(std::string_view text, std::size_t width) {
    auto v = shingle_hashes(text, width);
    return {v.begin(), v.end()};
}

/// Exact Jaccard over hashed shingle sets; the brute-force oracle the
/// MinHash estimate is checked against.
inline double exact_jaccard(std::string_view a, std::string_view b, std::size_t width) {
    auto sa = shingle_set(a, width);
    auto sb = shingle_set(b, width);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (auto h : sa) inter += sb.count(h);
    std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Family of 64-bit hash "permutations" h_i(x) = a_i * x + b_i with odd a_i,
/// seeded deterministically.
class MinHasher {
public:
    MinHasher(std::size_t permutations, std::uint64_t seed) {
        std::mt19937_64 rng(mix64(seed ^ 0x6d696e68617368ULL));
        a_.resize(permutations);
        b_.resize(permutations);
        for (std::size_t i = 0; i < permutations; ++i) {
            a_[i] = rng() | 1ULL;
            b_[i] = rng();
        }
    }

    MinHashSignature signature(const std::string& doc_id, std::string_view text,
                               std::size_t shingle_width) const {
        MinHashSignature sig;
        sig.doc_id = doc_id;
        sig.permutation_count = a_.size();
        sig.shingle_width = shingle_width;
        sig.values.assign(a_.size(), std::numeric_limits<std::uint64_t>::max());
        for (auto h : shingle_hashes(text, shingle_width)) {
            for (std::size_t i = 0; i < a_.size(); ++i) {
                std::uint64_t v = a_[i] * h + b_[i];
                if (v < sig.values[i]) sig.values[i] = v;
            }
        }
        return sig;
    }

private:
    std::vector<std::uint64_t> a_;
    std::vector<std::uint64_t> b_;
};

inline double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.values.size() != b.values.size() || a.values.empty()) {
        throw std::runtime_error("signatures not comparable");
    }
    std::size_t match = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i]) ++match;
    }
    return static_cast<double>(match) / static_cast<double>(a.values.size());
}

/// Probability that a pair with Jaccard t shares at least one LSH band:
/// 1 - (1 - t^rows)^bands.
inline double lsh_candidate_probability(double t, std::size_t rows, std::size_t bands) {
    double p_band = 1.0;
    for (std::size_t i = 0; i < rows; ++i) p_band *= t;
    double miss = 1.0;
    for (std::size_t i = 0; i < bands; ++i) miss *= (1.0 - p_band);
    return 1.0 - miss;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

/// LSH banding over precomputed signatures. Returns clusters as index lists
/// into `sigs`, each sorted, singletons included, cluster order by smallest
/// member so the output is independent of scheduling upstream.
inline std::vector<std::vector<std::size_t>> band_clusters(const std::vector<MinHashSignature>& sigs,
                                                           const OverlapParams& params) {
    params.validate();
    UnionFind uf(sigs.size());
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        const auto& v = sigs[i].values;
        for (std::size_t band = 0; band < params.band_count; ++band) {
            std::uint64_t h = fnv1a64({reinterpret_cast<const char*>(v.data() + band * params.rows_per_band),
                                       params.rows_per_band * sizeof(std::uint64_t)},
                                      0x9e3779b97f4a7c15ULL + band);
            buckets[h].push_back(i);
        }
    }
    for (auto& [h, members] : buckets) {
        for (std::size_t k = 1; k < members.size(); ++k) uf.unite(members[0], members[k]);
    }
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < sigs.size(); ++i) by_root[uf.find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> clusters;
    clusters.reserve(by_root.size());
    for (auto& [root, members] : by_root) {
        std::sort(members.begin(), members.end());
        clusters.push_back(std::move(members));
    }
    return clusters;
}

} // namespace mathcorpus
