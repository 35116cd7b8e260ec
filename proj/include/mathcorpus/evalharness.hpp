#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathcorpus/answers.hpp"
#include "mathcorpus/corpus.hpp"
#include "mathcorpus/gateway.hpp"

namespace mathcorpus {

enum class EvalMode { zero_shot, few_shot };

inline std::string to_string(EvalMode m) {
    return m == EvalMode::zero_shot ? "zero-shot" : "few-shot";
}

struct Exemplar {
    std::string question;
    std::string answer;
};

/// Prompt rendering configuration. GSM8K runs 8-shot, MATH 4-shot;
/// ZHONGKAO reuses GSM8K's exemplars and GAOKAO reuses MATH's.
struct EvalPromptConfig {
    EvalMode mode = EvalMode::zero_shot;
    std::string zero_shot_template = "Let's think step by step.";
    std::map<EvalDataset, std::vector<Exemplar>> exemplars; // keyed by GSM8K / MATH

    static EvalDataset exemplar_source(EvalDataset d) {
        switch (d) {
            case EvalDataset::GSM8K:
            case EvalDataset::ZHONGKAO:
                return EvalDataset::GSM8K;
            case EvalDataset::MATH:
            case EvalDataset::GAOKAO:
                return EvalDataset::MATH;
        }
        return EvalDataset::GSM8K;
    }

    static std::size_t shots(EvalDataset d) {
        return exemplar_source(d) == EvalDataset::GSM8K ? 8 : 4;
    }
};

inline std::vector<Exemplar> read_exemplars(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open exemplar file: " + path);
    std::vector<Exemplar> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line);
        out.push_back({j.at("question").get<std::string>(), j.at("answer").get<std::string>()});
    }
    return out;
}

inline std::string render_eval_prompt(const EvalItem& item, const EvalPromptConfig& config) {
    if (config.mode == EvalMode::zero_shot) {
        return "Question: " + item.question + "\nAnswer: " + config.zero_shot_template;
    }
    EvalDataset src = EvalPromptConfig::exemplar_source(item.dataset);
    auto it = config.exemplars.find(src);
    if (it == config.exemplars.end() || it->second.size() < EvalPromptConfig::shots(item.dataset)) {
        throw std::runtime_error("few-shot exemplars missing for " + to_string(src));
    }
    std::string out;
    std::size_t k = EvalPromptConfig::shots(item.dataset);
    for (std::size_t i = 0; i < k; ++i) {
        out += "Question: " + it->second[i].question + "\nAnswer: " + it->second[i].answer + "\n\n";
    }
    out += "Question: " + item.question + "\nAnswer:";
    return out;
}

enum class Outcome { correct, incorrect, inconclusive_failed };
enum class VerdictMethod { rule_based, comparator_model };

struct Verdict {
    Outcome outcome = Outcome::incorrect;
    VerdictMethod method = VerdictMethod::rule_based;
};

/// Two-stage answer comparison: rule-based extraction and normalization
/// first; extractions that fail escalate to the comparator-model gateway
/// when one is configured, else they count as incorrect.
inline Verdict compare_answer(const std::string& output, const std::string& reference,
                              Gateway* comparator = nullptr,
                              const std::string& comparator_key = "") {
    if (reference.empty()) throw std::runtime_error("compare_answer: empty reference");
    auto extracted = extract_final_answer(output);
    if (extracted) {
        return {answers_match(*extracted, reference) ? Outcome::correct : Outcome::incorrect,
                VerdictMethod::rule_based};
    }
    if (!comparator) return {Outcome::incorrect, VerdictMethod::rule_based};
    try {
        GatewayRequest req;
        req.model = "comparator";
        req.replay_key = comparator_key;
        req.messages.push_back(
            {"user", "Decide whether the candidate answer matches the reference answer. Reply with "
                     "exactly one word, True or False.\nReference: " +
                         reference + "\nCandidate: " + output});
        auto resp = comparator->send(req);
        std::string t = resp.text;
        std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
        bool yes = t.find("true") != std::string::npos;
        return {yes ? Outcome::correct : Outcome::incorrect, VerdictMethod::comparator_model};
    } catch (const GatewayError&) {
        return {Outcome::inconclusive_failed, VerdictMethod::comparator_model};
    }
}

// ---- statistical scoring ----

/// Formats a percentage the way the reports print it.
inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline long long pct_cents(double v) {
    return std::llround(std::stod(format_pct(v)) * 100.0);
}

inline std::string format_delta(long long cents) {
    char buf[32];
    if (cents == 0) return "0.00";
    std::snprintf(buf, sizeof buf, "%+.2f", static_cast<double>(cents) / 100.0);
    return buf;
}

struct DatasetScore {
    std::optional<double> zero;
    std::optional<double> few;

    double chosen() const {
        if (zero && few) return std::max(*zero, *few);
        if (zero) return *zero;
        if (few) return *few;
        throw std::runtime_error("dataset score: no mode present");
    }
};

struct ScoreReport {
    std::map<EvalDataset, DatasetScore> scores;
    std::vector<std::string> warnings;

    /// Arithmetic mean of the chosen per-dataset accuracies, accumulated in
    /// dataset order.
    double average() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (auto d : all_eval_datasets()) {
            auto it = scores.find(d);
            if (it == scores.end()) continue;
            sum += it->second.chosen();
            ++n;
        }
        if (n == 0) throw std::runtime_error("score report: empty");
        return sum / static_cast<double>(n);
    }

    json to_json() const {
        json j;
        json cols = json::object();
        for (auto& [d, s] : scores) {
            json c;
            if (s.zero) c["zero_shot"] = format_pct(*s.zero);
            if (s.few) c["few_shot"] = format_pct(*s.few);
            c["chosen"] = format_pct(s.chosen());
            cols[to_string(d)] = c;
        }
        j["datasets"] = cols;
        j["average"] = format_pct(average());
        if (!warnings.empty()) j["warnings"] = warnings;
        return j;
    }

    static ScoreReport from_json(const json& j) {
        ScoreReport r;
        for (auto& [name, c] : j.at("datasets").items()) {
            DatasetScore s;
            if (c.contains("zero_shot")) s.zero = std::stod(c["zero_shot"].get<std::string>());
            if (c.contains("few_shot")) s.few = std::stod(c["few_shot"].get<std::string>());
            if (!s.zero && !s.few && c.contains("chosen")) s.zero = std::stod(c["chosen"].get<std::string>());
            r.scores[eval_dataset_from_string(name)] = s;
        }
        return r;
    }
};

struct ItemVerdict {
    EvalDataset dataset = EvalDataset::GSM8K;
    EvalMode mode = EvalMode::zero_shot;
    Verdict verdict;
};

/// Per-dataset accuracy per mode, chosen = max of the two, average = mean
/// of the chosen values. A missing mode scores with the available one and
/// warns rather than fabricating the max.
inline ScoreReport score(const std::vector<ItemVerdict>& verdicts) {
    struct Tally {
        std::size_t correct = 0, total = 0;
    };
    std::map<EvalDataset, std::map<EvalMode, Tally>> tallies;
    for (auto& v : verdicts) {
        auto& t = tallies[v.dataset][v.mode];
        ++t.total;
        if (v.verdict.outcome == Outcome::correct) ++t.correct;
    }
    if (tallies.empty()) throw std::runtime_error("score: no verdicts");
    ScoreReport report;
    for (auto& [d, modes] : tallies) {
        DatasetScore s;
        for (auto& [m, t] : modes) {
            if (t.total == 0) continue;
            double acc = 100.0 * static_cast<double>(t.correct) / static_cast<double>(t.total);
            (m == EvalMode::zero_shot ? s.zero : s.few) = acc;
        }
        if (!s.zero || !s.few) {
            report.warnings.push_back("dataset " + to_string(d) +
                                      ": only one evaluation mode present; chosen = that mode");
        }
        report.scores[d] = s;
    }
    return report;
}

inline ScoreReport score_from_accuracies(const std::map<EvalDataset, std::pair<double, double>>& acc) {
    ScoreReport r;
    for (auto& [d, zf] : acc) r.scores[d] = DatasetScore{zf.first, zf.second};
    return r;
}

struct DeltaReport {
    std::map<EvalDataset, std::string> dataset_delta; // formatted with sign
    std::string average_delta;

    json to_json() const {
        json j;
        for (auto& [d, v] : dataset_delta) j[to_string(d)] = v;
        j["average"] = average_delta;
        return j;
    }
};

/// Per-dataset and average deltas, test - base, computed on the printed
/// 2-decimal values so the output matches the report cells exactly.
inline DeltaReport delta_report(const ScoreReport& base, const ScoreReport& test) {
    DeltaReport out;
    for (auto& [d, ts] : test.scores) {
        auto it = base.scores.find(d);
        if (it == base.scores.end()) throw std::runtime_error("delta report: dataset mismatch");
        out.dataset_delta[d] = format_delta(pct_cents(ts.chosen()) - pct_cents(it->second.chosen()));
    }
    for (auto& [d, bs] : base.scores) {
        if (!test.scores.count(d)) throw std::runtime_error("delta report: dataset mismatch");
    }
    out.average_delta = format_delta(pct_cents(test.average()) - pct_cents(base.average()));
    return out;
}

// ---- driving a model through the gateway ----

struct EvalRunResult {
    std::vector<ItemVerdict> verdicts;
    std::size_t inconclusive_failed = 0;
};

/// Renders prompts, queries the model gateway, and grades each output.
/// Replay keys are "eval:<dataset>:<index>:<mode>".
inline EvalRunResult evaluate_items(const std::vector<EvalItem>& items, const EvalPromptConfig& config,
                                    Gateway& model, Gateway* comparator = nullptr,
                                    const std::string& model_id = "model") {
    EvalRunResult out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        GatewayRequest req;
        req.model = model_id;
        req.temperature = 0.0;
        req.replay_key = "eval:" + to_string(items[i].dataset) + ":" + std::to_string(i) + ":" +
                         (config.mode == EvalMode::zero_shot ? "zero" : "few");
        req.messages.push_back({"user", render_eval_prompt(items[i], config)});
        std::string text;
        try {
            text = model.send(req).text;
        } catch (const GatewayError&) {
            out.verdicts.push_back({items[i].dataset, config.mode,
                                    {Outcome::inconclusive_failed, VerdictMethod::rule_based}});
            ++out.inconclusive_failed;
            continue;
        }
        auto v = compare_answer(text, items[i].reference_answer, comparator,
                                "compare:" + req.replay_key);
        if (v.outcome == Outcome::inconclusive_failed) ++out.inconclusive_failed;
        out.verdicts.push_back({items[i].dataset, config.mode, v});
    }
    return out;
}

} // namespace mathcorpus
