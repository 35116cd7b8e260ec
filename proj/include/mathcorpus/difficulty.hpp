#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathcorpus/corpus.hpp"
#include "mathcorpus/tokenizer.hpp"

namespace mathcorpus {

/// Step-count boundaries: 1..easy_max easy, easy_max+1..medium_max medium,
/// above that hard.
struct DifficultyRule {
    int easy_max_steps = 3;
    int medium_max_steps = 7;
    std::string strategy = "marker-cascade";

    void validate() const {
        if (easy_max_steps <= 0 || easy_max_steps >= medium_max_steps) {
            throw std::runtime_error("difficulty rule: need 0 < easy_max_steps < medium_max_steps");
        }
    }
};

namespace detail {

inline bool looks_mathematical(const std::string& block) {
    bool has_digit = false, has_op = false;
    for (char c : block) {
        if (std::isdigit(static_cast<unsigned char>(c))) has_digit = true;
        if (c == '=' || c == '+' || c == '-' || c == '*' || c == '/' || c == '^' || c == '%') has_op = true;
    }
    return has_digit || has_op;
}

inline std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Counts reasoning steps with a priority cascade: explicit "Step k" markers
/// first, then numbered-list lines, then newline blocks containing a
/// mathematical expression, finally sentence segmentation. Always >= 1.
inline int count_steps(const std::string& solution, const DifficultyRule& rule = {}) {
    if (solution.empty()) throw std::runtime_error("count_steps: empty solution");
    (void)rule;

    // 1. explicit "Step k" markers
    static const std::regex step_marker(R"((^|[^A-Za-z])[Ss]tep\s*(\d+))");
    std::set<int> step_nums;
    for (auto it = std::sregex_iterator(solution.begin(), solution.end(), step_marker);
         it != std::sregex_iterator(); ++it) {
        step_nums.insert(std::stoi((*it)[2].str()));
    }
    if (!step_nums.empty()) return static_cast<int>(step_nums.size());

    auto lines = detail::split_lines(solution);

    // 2. numbered list lines: "1. ..." / "2) ..."
    static const std::regex numbered(R"(^\s*(\d+)[.)]\s+)");
    int list_count = 0;
    for (auto& line : lines) {
        if (std::regex_search(line, numbered)) ++list_count;
    }
    if (list_count > 0) return list_count;

    // 3. newline blocks carrying a mathematical expression
    if (lines.size() > 1) {
        int math_blocks = 0;
        for (auto& line : lines) {
            if (!line.empty() && detail::looks_mathematical(line)) ++math_blocks;
        }
        if (math_blocks > 0) return math_blocks;
    }

    // 4. sentence segmentation
    int sentences = 0;
    bool content = false;
    for (char c : solution) {
        if (c == '.' || c == '!' || c == '?') {
            if (content) ++sentences;
            content = false;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            content = true;
        }
    }
    if (content) ++sentences;
    return std::max(sentences, 1);
}

inline Difficulty bucket_steps(int steps, const DifficultyRule& rule = {}) {
    rule.validate();
    if (steps <= rule.easy_max_steps) return Difficulty::easy;
    if (steps <= rule.medium_max_steps) return Difficulty::medium;
    return Difficulty::hard;
}

/// Classifies one record. Records with an empty question stay unclassified
/// (the seed-set completeness filter).
inline Difficulty bucket(const ProblemRecord& record, const DifficultyRule& rule = {}) {
    rule.validate();
    if (record.question.empty() || record.solution.empty()) return Difficulty::unclassified;
    int steps = record.steps.empty() ? count_steps(record.solution, rule)
                                     : static_cast<int>(record.steps.size());
    return bucket_steps(steps, rule);
}

struct SplitReport {
    std::string strategy;
    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::size_t> tokens;

    double fraction_of_counts(const std::string& key) const {
        std::size_t total = 0;
        for (auto& [k, v] : counts) total += v;
        return total == 0 ? 0.0 : static_cast<double>(counts.at(key)) / static_cast<double>(total);
    }
    double fraction_of_tokens(const std::string& key) const {
        std::size_t total = 0;
        for (auto& [k, v] : tokens) total += v;
        return total == 0 ? 0.0 : static_cast<double>(tokens.at(key)) / static_cast<double>(total);
    }

    json to_json() const {
        json j;
        j["strategy"] = strategy;
        j["counts"] = counts;
        j["tokens"] = tokens;
        json cf = json::object(), tf = json::object();
        for (auto& [k, v] : counts) cf[k] = fraction_of_counts(k);
        for (auto& [k, v] : tokens) tf[k] = fraction_of_tokens(k);
        j["count_fractions"] = cf;
        j["token_fractions"] = tf;
        return j;
    }
};

/// Buckets a problem corpus into easy/medium/hard (plus unclassified).
inline std::pair<std::map<std::string, std::vector<ProblemRecord>>, SplitReport>
bucket_corpus(const std::vector<ProblemRecord>& records, const DifficultyRule& rule,
              const Tokenizer& tok) {
    rule.validate();
    std::map<std::string, std::vector<ProblemRecord>> buckets;
    SplitReport report;
    report.strategy = rule.strategy;
    for (auto& [name, unused] : std::map<std::string, int>{
             {"easy", 0}, {"medium", 0}, {"hard", 0}, {"unclassified", 0}}) {
        buckets[name];
        report.counts[name] = 0;
        report.tokens[name] = 0;
    }
    for (auto r : records) {
        r.difficulty = bucket(r, rule);
        std::string key = to_string(r.difficulty);
        report.counts[key] += 1;
        report.tokens[key] += tok.count(r.question) + tok.count(r.solution);
        buckets[key].push_back(std::move(r));
    }
    return {std::move(buckets), std::move(report)};
}

struct TagPartition {
    std::string name;
    std::set<std::string> tags;
};

/// Routes each record to the first partition matching one of its tags;
/// untagged or unmatched records land in the "residual" bin. Partition tag
/// sets must be disjoint.
inline std::pair<std::map<std::string, std::vector<ProblemRecord>>, SplitReport>
split_by_tags(const std::vector<ProblemRecord>& records, const std::vector<TagPartition>& partitions,
              const Tokenizer& tok) {
    std::set<std::string> seen;
    for (auto& p : partitions) {
        for (auto& t : p.tags) {
            if (!seen.insert(t).second) {
                throw std::runtime_error("split_by_tags: tag '" + t + "' appears in multiple partitions");
            }
        }
    }
    std::map<std::string, std::vector<ProblemRecord>> out;
    SplitReport report;
    report.strategy = "first-matching-tag";
    for (auto& p : partitions) {
        out[p.name];
        report.counts[p.name] = 0;
        report.tokens[p.name] = 0;
    }
    out["residual"];
    report.counts["residual"] = 0;
    report.tokens["residual"] = 0;

    for (auto& r : records) {
        std::string dest = "residual";
        for (auto& p : partitions) {
            bool match = std::any_of(r.knowledge_tags.begin(), r.knowledge_tags.end(),
                                     [&](const std::string& t) { return p.tags.count(t) > 0; });
            if (match) {
                dest = p.name;
                break;
            }
        }
        report.counts[dest] += 1;
        report.tokens[dest] += tok.count(r.question) + tok.count(r.solution);
        out[dest].push_back(r);
    }
    return {std::move(out), std::move(report)};
}

} // namespace mathcorpus
