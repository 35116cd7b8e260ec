#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathcorpus/corpus.hpp"
#include "mathcorpus/lcs.hpp"
#include "mathcorpus/minhash.hpp"
#include "mathcorpus/parallel.hpp"

namespace mathcorpus {

struct Removal {
    std::string doc_id;
    std::string reason;   // "duplicate-of" or "contaminated-by"
    std::string other_id; // surviving duplicate partner, or eval item id
    std::size_t span_bytes = 0;
};

struct DuplicateCluster {
    std::string survivor;
    std::vector<std::string> members; // includes survivor, sorted
};

struct RemovalReport {
    std::vector<Removal> removed;     // ordered by doc id
    std::vector<DuplicateCluster> clusters;
    std::size_t input_documents = 0;
    std::size_t surviving_documents = 0;
    std::string warning;

    json to_json() const {
        json j;
        j["input_documents"] = input_documents;
        j["surviving_documents"] = surviving_documents;
        j["removed"] = json::array();
        for (auto& r : removed) {
            j["removed"].push_back({{"id", r.doc_id},
                                    {"reason", r.reason},
                                    {"other", r.other_id},
                                    {"span_bytes", r.span_bytes}});
        }
        j["clusters"] = json::array();
        for (auto& c : clusters) {
            j["clusters"].push_back({{"survivor", c.survivor}, {"members", c.members}});
        }
        if (!warning.empty()) j["warning"] = warning;
        return j;
    }
};

namespace detail {

inline std::vector<MinHashSignature> compute_signatures(const std::vector<Document>& docs,
                                                        const OverlapParams& params,
                                                        std::size_t jobs) {
    MinHasher hasher(params.permutation_count, params.seed);
    std::vector<MinHashSignature> sigs(docs.size());
    parallel_for(docs.size(), jobs, [&](std::size_t i) {
        sigs[i] = hasher.signature(docs[i].id, docs[i].text, params.shingle_width);
    });
    return sigs;
}

} // namespace detail

inline MinHashSignature compute_signature(const Document& doc, const OverlapParams& params) {
    MinHasher hasher(params.permutation_count, params.seed);
    return hasher.signature(doc.id, doc.text, params.shingle_width);
}

/// LSH candidate clusters over a corpus, as lists of doc ids.
inline std::vector<std::vector<std::string>> find_duplicate_candidates(const std::vector<Document>& docs,
                                                                       const OverlapParams& params,
                                                                       std::size_t jobs = 1) {
    auto sigs = detail::compute_signatures(docs, params, jobs);
    auto clusters = band_clusters(sigs, params);
    std::vector<std::vector<std::string>> out;
    out.reserve(clusters.size());
    for (auto& c : clusters) {
        std::vector<std::string> ids;
        ids.reserve(c.size());
        for (auto i : c) ids.push_back(docs[i].id);
        std::sort(ids.begin(), ids.end());
        out.push_back(std::move(ids));
    }
    return out;
}

/// Near-duplicate removal. MinHash/LSH proposes candidate clusters; every
/// candidate pair is then verified by exact longest-common-substring length
/// in bytes, and only pairs meeting dedup_threshold_bytes count as
/// duplicates. Within each verified component the lexicographically
/// smallest id survives.
inline std::pair<std::vector<Document>, RemovalReport> deduplicate(const std::vector<Document>& docs,
                                                                   const OverlapParams& params,
                                                                   std::size_t jobs = 1) {
    params.validate();
    RemovalReport report;
    report.input_documents = docs.size();

    auto sigs = detail::compute_signatures(docs, params, jobs);
    auto candidate_clusters = band_clusters(sigs, params);

    // Verified duplicate pairs, gathered per candidate cluster.
    struct Pair {
        std::size_t a, b, span;
    };
    std::vector<std::vector<Pair>> verified(candidate_clusters.size());
    parallel_for(candidate_clusters.size(), jobs, [&](std::size_t ci) {
        const auto& cluster = candidate_clusters[ci];
        for (std::size_t x = 0; x < cluster.size(); ++x) {
            for (std::size_t y = x + 1; y < cluster.size(); ++y) {
                std::size_t span = longest_common_substring_bytes(docs[cluster[x]].text,
                                                                  docs[cluster[y]].text);
                if (span >= params.dedup_threshold_bytes) {
                    verified[ci].push_back({cluster[x], cluster[y], span});
                }
            }
        }
    });

    UnionFind uf(docs.size());
    for (auto& pairs : verified) {
        for (auto& p : pairs) uf.unite(p.a, p.b);
    }

    // Components keyed by the smallest doc id inside them.
    std::map<std::string, std::vector<std::size_t>> components;
    std::vector<std::size_t> root_of(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) root_of[i] = uf.find(i);
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < docs.size(); ++i) by_root[root_of[i]].push_back(i);

    std::set<std::size_t> removed_idx;
    for (auto& [root, members] : by_root) {
        if (members.size() < 2) continue;
        std::vector<std::size_t> sorted = members;
        std::sort(sorted.begin(), sorted.end(),
                  [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });
        DuplicateCluster dc;
        dc.survivor = docs[sorted.front()].id;
        for (auto i : sorted) dc.members.push_back(docs[i].id);
        report.clusters.push_back(std::move(dc));
        for (std::size_t k = 1; k < sorted.size(); ++k) removed_idx.insert(sorted[k]);
    }
    std::sort(report.clusters.begin(), report.clusters.end(),
              [](const DuplicateCluster& a, const DuplicateCluster& b) { return a.survivor < b.survivor; });

    // Reason: the smallest-id verified partner of each removed doc.
    std::map<std::size_t, std::pair<std::string, std::size_t>> partner;
    for (auto& pairs : verified) {
        for (auto& p : pairs) {
            auto note = [&](std::size_t victim, std::size_t other) {
                auto it = partner.find(victim);
                if (it == partner.end() || docs[other].id < it->second.first) {
                    partner[victim] = {docs[other].id, p.span};
                }
            };
            note(p.a, p.b);
            note(p.b, p.a);
        }
    }

    std::vector<Document> survivors;
    survivors.reserve(docs.size() - removed_idx.size());
    std::vector<Removal> removals;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (removed_idx.count(i)) {
            auto& [other, span] = partner.at(i);
            removals.push_back({docs[i].id, "duplicate-of", other, span});
        } else {
            survivors.push_back(docs[i]);
        }
    }
    std::sort(removals.begin(), removals.end(),
              [](const Removal& a, const Removal& b) { return a.doc_id < b.doc_id; });
    report.removed = std::move(removals);
    report.surviving_documents = survivors.size();
    return {std::move(survivors), std::move(report)};
}

/// Removes training documents whose exact byte overlap with any eval item's
/// question or reference answer exceeds decontam_threshold_bytes. The report
/// names the first contaminating item in eval-set order.
inline std::pair<std::vector<Document>, RemovalReport> decontaminate(const std::vector<Document>& docs,
                                                                     const std::vector<EvalItem>& eval_items,
                                                                     const OverlapParams& params,
                                                                     std::size_t jobs = 1) {
    params.validate();
    RemovalReport report;
    report.input_documents = docs.size();
    if (eval_items.empty()) {
        report.warning = "empty eval set; decontamination is a no-op";
        report.surviving_documents = docs.size();
        return {docs, report};
    }

    struct Hit {
        bool contaminated = false;
        std::size_t item_index = 0;
        std::size_t span = 0;
    };
    std::vector<Hit> hits(docs.size());
    parallel_for(docs.size(), jobs, [&](std::size_t i) {
        SuffixAutomaton sa(docs[i].text);
        for (std::size_t k = 0; k < eval_items.size(); ++k) {
            std::size_t span = std::max(sa.longest_common_substring(eval_items[k].question),
                                        sa.longest_common_substring(eval_items[k].reference_answer));
            if (span > params.decontam_threshold_bytes) {
                hits[i] = {true, k, span};
                break;
            }
        }
    });

    std::vector<Document> survivors;
    std::vector<Removal> removals;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (hits[i].contaminated) {
            const auto& item = eval_items[hits[i].item_index];
            removals.push_back({docs[i].id, "contaminated-by",
                                to_string(item.dataset) + "#" + std::to_string(hits[i].item_index),
                                hits[i].span});
        } else {
            survivors.push_back(docs[i]);
        }
    }
    std::sort(removals.begin(), removals.end(),
              [](const Removal& a, const Removal& b) { return a.doc_id < b.doc_id; });
    report.removed = std::move(removals);
    report.surviving_documents = survivors.size();
    return {std::move(survivors), std::move(report)};
}

} // namespace mathcorpus
