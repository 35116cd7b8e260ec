#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathcorpus/corpus.hpp"
#include "mathcorpus/hash.hpp"

namespace mathcorpus {

/// Token budgets, mixing ratios and run geometry for one training recipe.
struct MixtureSpec {
    double general_budget = 0;         // tokens
    double math_corpus_budget = 0;
    double problem_budget = 0;
    double synthetic_budget = 0;
    double general_ratio = 4;          // general : math
    double math_ratio = 6;
    double corpus_ratio = 3;           // math corpus : problem-solving
    double problem_ratio = 7;
    std::uint64_t steps = 0;
    std::uint64_t batch_size = 0;      // sequences
    std::uint64_t context_length = 0;  // tokens
    double validation_fraction = 0.05;
    double max_epochs = 10;            // warning threshold only
    std::uint64_t seed = 0;

    void validate() const {
        if (steps == 0 || batch_size == 0 || context_length == 0) {
            throw std::runtime_error("mixture spec: steps, batch_size, context_length must be positive");
        }
        if (general_ratio < 0 || math_ratio < 0 || general_ratio + math_ratio <= 0) {
            throw std::runtime_error("mixture spec: data mixture ratio must be a nonnegative pair with positive sum");
        }
        if (corpus_ratio < 0 || problem_ratio < 0 || corpus_ratio + problem_ratio <= 0) {
            throw std::runtime_error("mixture spec: math data mixture ratio must be a nonnegative pair with positive sum");
        }
        if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
            throw std::runtime_error("mixture spec: validation_fraction must be in (0,1)");
        }
    }

    double budget(Source s) const {
        switch (s) {
            case Source::general: return general_budget;
            case Source::math_corpus: return math_corpus_budget;
            case Source::problem_solving: return problem_budget;
            case Source::synthetic: return synthetic_budget;
        }
        return 0;
    }
};

struct MixturePlan {
    double total_tokens = 0;
    std::map<std::string, double> target_tokens;     // keyed by source name
    std::map<std::string, double> epochs;            // target / budget
    std::map<std::string, double> tokens_per_step;   // per-step source quota
    std::map<std::string, std::uint64_t> steps_to_consume; // steps until one full pass
    std::vector<std::string> warnings;

    json to_json() const {
        json j;
        j["total_tokens"] = total_tokens;
        j["target_tokens"] = target_tokens;
        j["epochs"] = epochs;
        j["tokens_per_step"] = tokens_per_step;
        j["steps_to_consume"] = steps_to_consume;
        j["warnings"] = warnings;
        return j;
    }
};

/// Token shares per source. The general:math ratio splits the stream, the
/// math share then splits corpus:problem; any synthetic budget rides on the
/// problem-solving side proportionally to budget.
inline std::map<Source, double> source_shares(const MixtureSpec& spec) {
    double gm = spec.general_ratio + spec.math_ratio;
    double general = spec.general_ratio / gm;
    double math = spec.math_ratio / gm;
    double cp = spec.corpus_ratio + spec.problem_ratio;
    double corpus = math * spec.corpus_ratio / cp;
    double prob_side = math * spec.problem_ratio / cp;
    double prob = prob_side, synth = 0.0;
    if (spec.synthetic_budget > 0 && spec.problem_budget + spec.synthetic_budget > 0) {
        double denom = spec.problem_budget + spec.synthetic_budget;
        prob = prob_side * spec.problem_budget / denom;
        synth = prob_side * spec.synthetic_budget / denom;
    }
    return {{Source::general, general},
            {Source::math_corpus, corpus},
            {Source::problem_solving, prob},
            {Source::synthetic, synth}};
}

inline MixturePlan plan_mixture(const MixtureSpec& spec) {
    spec.validate();
    MixturePlan plan;
    plan.total_tokens = static_cast<double>(spec.steps) * static_cast<double>(spec.batch_size) *
                        static_cast<double>(spec.context_length);
    double tokens_per_step = static_cast<double>(spec.batch_size) * static_cast<double>(spec.context_length);
    auto shares = source_shares(spec);
    for (auto s : all_sources()) {
        double share = shares.at(s);
        std::string name = to_string(s);
        if (share <= 0.0) continue;
        if (spec.budget(s) <= 0.0) {
            throw std::runtime_error("mixture spec: source '" + name +
                                     "' has positive share but zero token budget");
        }
        double target = plan.total_tokens * share;
        plan.target_tokens[name] = target;
        plan.tokens_per_step[name] = tokens_per_step * share;
        plan.epochs[name] = target / spec.budget(s);
        plan.steps_to_consume[name] =
            static_cast<std::uint64_t>(std::ceil(spec.budget(s) / (tokens_per_step * share)));
        if (plan.epochs[name] > spec.max_epochs) {
            plan.warnings.push_back("source '" + name + "' needs " + std::to_string(plan.epochs[name]) +
                                    " epochs, above the configured cap of " + std::to_string(spec.max_epochs));
        }
    }
    return plan;
}

struct ScheduleEntry {
    std::uint64_t step = 0;
    Source source = Source::general;
    std::string doc_id;
};

struct SamplingManifest {
    std::vector<ScheduleEntry> entries;
    std::map<std::string, std::vector<std::string>> validation_holdout; // per source
    std::map<std::string, double> realized_tokens;                      // per source
};

namespace detail {

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace detail

/// Turns a plan into an ordered per-step document schedule. Each source is
/// sampled without replacement from a seeded shuffle; exhausted sources
/// reshuffle with an epoch-indexed sub-seed. A validation fraction of each
/// source is held out before scheduling.
inline SamplingManifest realize_schedule(const MixturePlan& plan, const MixtureSpec& spec,
                                         const std::map<Source, std::vector<Document>>& corpora) {
    SamplingManifest manifest;
    struct Cursor {
        std::vector<const Document*> train;
        std::vector<std::size_t> order;
        std::size_t pos = 0;
        std::uint64_t epoch = 0;
        double emitted = 0; // tokens
        double quota_per_step = 0;
        Source source;
    };
    std::vector<Cursor> cursors;

    for (auto s : all_sources()) {
        std::string name = to_string(s);
        auto qit = plan.tokens_per_step.find(name);
        if (qit == plan.tokens_per_step.end()) continue;
        auto cit = corpora.find(s);
        if (cit == corpora.end() || cit->second.empty()) {
            throw std::runtime_error("active source '" + name + "' has an empty corpus");
        }
        const auto& docs = cit->second;

        double total = 0;
        for (auto& d : docs) total += static_cast<double>(d.token_count);
        auto perm = detail::seeded_permutation(docs.size(), subseed(spec.seed, "holdout:" + name));
        double held = 0;
        std::vector<bool> is_held(docs.size(), false);
        for (auto i : perm) {
            if (held >= spec.validation_fraction * total) break;
            if (docs.size() - std::count(is_held.begin(), is_held.end(), true) <= 1) break;
            is_held[i] = true;
            held += static_cast<double>(docs[i].token_count);
            manifest.validation_holdout[name].push_back(docs[i].id);
        }
        Cursor c;
        c.source = s;
        c.quota_per_step = qit->second;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (!is_held[i]) c.train.push_back(&docs[i]);
        }
        if (c.train.empty()) throw std::runtime_error("source '" + name + "' empty after validation holdout");
        c.order = detail::seeded_permutation(c.train.size(),
                                             subseed(spec.seed, "schedule:" + name + ":epoch:0"));
        cursors.push_back(std::move(c));
    }

    for (std::uint64_t step = 0; step < spec.steps; ++step) {
        for (auto& c : cursors) {
            double due = c.quota_per_step * static_cast<double>(step + 1);
            while (c.emitted < due) {
                const Document* doc = c.train[c.order[c.pos]];
                manifest.entries.push_back({step, c.source, doc->id});
                c.emitted += static_cast<double>(doc->token_count);
                if (++c.pos >= c.order.size()) {
                    c.pos = 0;
                    ++c.epoch;
                    c.order = detail::seeded_permutation(
                        c.train.size(), subseed(spec.seed, "schedule:" + to_string(c.source) +
                                                               ":epoch:" + std::to_string(c.epoch)));
                }
            }
        }
    }
    for (auto& c : cursors) manifest.realized_tokens[to_string(c.source)] = c.emitted;
    return manifest;
}

/// Deterministic token-weighted sample: a seeded shuffle consumed greedily
/// until the token total is as close as possible to fraction * corpus total.
inline std::vector<Document> sample_fraction(const std::vector<Document>& docs, double fraction,
                                             std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0) {
        throw std::runtime_error("sample_fraction: fraction must be in (0,1]");
    }
    if (fraction == 1.0) return docs;
    double total = 0;
    for (auto& d : docs) total += static_cast<double>(d.token_count);
    double target = fraction * total;

    auto perm = detail::seeded_permutation(docs.size(), subseed(seed, "sample-fraction"));
    std::vector<bool> selected(docs.size(), false);
    double acc = 0;
    for (auto i : perm) {
        if (acc >= target) break;
        double tok = static_cast<double>(docs[i].token_count);
        // Skip docs that would overshoot worse than leaving the gap open.
        if (acc + tok - target > target - acc) continue;
        selected[i] = true;
        acc += tok;
    }
    if (acc == 0 && !docs.empty()) selected[perm.front()] = true;
    std::vector<Document> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (selected[i]) out.push_back(docs[i]);
    }
    return out;
}

} // namespace mathcorpus
