#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mathcorpus/answers.hpp"
#include "mathcorpus/corpus.hpp"
#include "mathcorpus/difficulty.hpp"
#include "mathcorpus/gateway.hpp"
#include "mathcorpus/hash.hpp"
#include "mathcorpus/prompts.hpp"
#include "mathcorpus/tokenizer.hpp"

namespace mathcorpus {

/// Parsed, validated output of one synthesis attempt on one seed.
struct SynthesisResult {
    SynthesisMethod method = SynthesisMethod::response_diversification;
    std::string seed_id;
    bool accepted = false;
    std::vector<Document> produced; // training-text records, source = synthetic
    std::string rejection_reason;
    std::string raw; // full model output, retained for audit
};

namespace detail {

inline std::string ltrim_view(const std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
}

inline std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

/// Contents of the next <tag>...</tag> at or after `pos`; advances pos past
/// the closing tag.
inline std::optional<std::string> next_tag(const std::string& raw, const std::string& tag,
                                           std::size_t& pos) {
    std::string open = "<" + tag + ">";
    std::string close = "</" + tag + ">";
    std::size_t a = raw.find(open, pos);
    if (a == std::string::npos) return std::nullopt;
    std::size_t b = raw.find(close, a + open.size());
    if (b == std::string::npos) return std::nullopt;
    std::string inner = raw.substr(a + open.size(), b - a - open.size());
    pos = b + close.size();
    return inner;
}

inline Document make_synthetic_doc(SynthesisMethod method, const std::string& seed_id,
                                   std::size_t index, std::string text) {
    Document d;
    d.source = Source::synthetic;
    d.text = std::move(text);
    d.id = "syn-" + to_string(method) + "-" + seed_id + "-" + std::to_string(index);
    d.metadata["method"] = to_string(method);
    d.metadata["seed"] = seed_id;
    return d;
}

inline SynthesisResult rejected(SynthesisMethod method, const std::string& seed_id,
                                const std::string& raw, std::string reason) {
    SynthesisResult r;
    r.method = method;
    r.seed_id = seed_id;
    r.raw = raw;
    r.accepted = false;
    r.rejection_reason = std::move(reason);
    return r;
}

inline SynthesisResult parse_diversification(const ProblemRecord& seed, const std::string& raw) {
    constexpr auto M = SynthesisMethod::response_diversification;
    std::size_t tags = count_occurrences(raw, "<response>");
    if (tags == 0) return rejected(M, seed.id, raw, "malformed: missing <response> tag");
    if (tags > 1) return rejected(M, seed.id, raw, "ambiguous: multiple <response> tags");
    std::string body = ltrim_view(raw);
    if (body.rfind("<response>refuse</response>", 0) == 0) {
        return rejected(M, seed.id, raw, "model refused");
    }
    if (body.rfind("<response>accept</response>", 0) != 0) {
        return rejected(M, seed.id, raw, "malformed: response tag not at start or not accept/refuse");
    }
    std::size_t s2 = body.find("Solution2:");
    std::size_t s3 = body.find("Solution3:");
    std::vector<std::string> solutions;
    if (s2 != std::string::npos) {
        std::size_t end = (s3 != std::string::npos && s3 > s2) ? s3 : body.size();
        solutions.push_back(body.substr(s2 + 10, end - s2 - 10));
    }
    if (s3 != std::string::npos) solutions.push_back(body.substr(s3 + 10));
    if (solutions.empty()) return rejected(M, seed.id, raw, "malformed: accept without Solution2/Solution3");

    SynthesisResult r;
    r.method = M;
    r.seed_id = seed.id;
    r.raw = raw;
    std::size_t idx = 0;
    for (auto& sol : solutions) {
        // Keep only solutions whose final answer matches the seed's.
        auto extracted = extract_final_answer(sol);
        if (!extracted || !answers_match(*extracted, seed.final_answer)) continue;
        r.produced.push_back(make_synthetic_doc(
            M, seed.id, idx++, "Question: " + seed.question + "\nSolution: " + std::string(sol)));
    }
    if (r.produced.empty()) {
        return rejected(M, seed.id, raw, "no solution with a verified final answer");
    }
    r.accepted = true;
    return r;
}

inline SynthesisResult parse_query_expansion(const ProblemRecord& seed, const std::string& raw) {
    constexpr auto M = SynthesisMethod::query_expansion;
    SynthesisResult r;
    r.method = M;
    r.seed_id = seed.id;
    r.raw = raw;

    std::size_t pos = 0;
    std::size_t parsed_tuples = 0;
    std::size_t idx = 0;
    while (r.produced.size() < 2) { // "a total of 2 questions"
        auto statement = next_tag(raw, "statement", pos);
        if (!statement) break;
        auto question = next_tag(raw, "question", pos);
        auto solution = next_tag(raw, "solution", pos);
        auto check = next_tag(raw, "check", pos);
        auto reason = next_tag(raw, "reason", pos); // optional trailer
        (void)reason;
        if (!question || !solution || !check) break; // truncated tuple
        ++parsed_tuples;
        std::string verdict = ltrim_view(*check);
        while (!verdict.empty() && std::isspace(static_cast<unsigned char>(verdict.back()))) verdict.pop_back();
        for (auto& c : verdict) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (verdict != "accept") continue; // Refuse (or junk) drops the tuple
        r.produced.push_back(make_synthetic_doc(
            M, seed.id, idx++, "Question: " + *question + "\nSolution: " + *solution));
    }
    if (parsed_tuples == 0) return rejected(M, seed.id, raw, "malformed: no complete tuple");
    if (r.produced.empty()) return rejected(M, seed.id, raw, "all tuples refused");
    r.accepted = true;
    return r;
}

inline SynthesisResult parse_tutorship(const ProblemRecord& seed, const std::string& raw,
                                       const std::string& student_answer) {
    constexpr auto M = SynthesisMethod::tutorship_amplification;
    std::string body = ltrim_view(raw);
    bool correct = body.rfind("<check>correct</check>", 0) == 0;
    bool wrong = body.rfind("<check>wrong</check>", 0) == 0;
    if (!correct && !wrong) {
        return rejected(M, seed.id, raw, "malformed: reply must start with <check>correct</check> or <check>wrong</check>");
    }
    if (count_occurrences(raw, "<check>") > 1) {
        return rejected(M, seed.id, raw, "ambiguous: multiple <check> tags");
    }
    SynthesisResult r;
    r.method = M;
    r.seed_id = seed.id;
    r.raw = raw;
    r.accepted = true;
    // The check tag (and for wrong answers the teacher's correction) stays in
    // the training text so the trained model sees the correction protocol.
    std::string text = "Question: " + seed.question + "\nSolution: " + student_answer + "\n" + body;
    r.produced.push_back(make_synthetic_doc(M, seed.id, 0, std::move(text)));
    return r;
}

} // namespace detail

/// Parses one raw model output per the method's tag grammar. Total: any raw
/// string yields accepted or rejected, never a crash.
inline SynthesisResult parse_response(SynthesisMethod method, const ProblemRecord& seed,
                                      const std::string& raw, const std::string& student_answer = "") {
    if (raw.empty()) return detail::rejected(method, seed.id, raw, "malformed: empty response");
    switch (method) {
        case SynthesisMethod::response_diversification:
            return detail::parse_diversification(seed, raw);
        case SynthesisMethod::query_expansion:
            return detail::parse_query_expansion(seed, raw);
        case SynthesisMethod::tutorship_amplification:
            return detail::parse_tutorship(seed, raw, student_answer);
        case SynthesisMethod::retrospective_enhancement:
            return detail::rejected(method, seed.id, raw, "retrospective enhancement does not parse model output");
    }
    return detail::rejected(method, seed.id, raw, "unknown method");
}

inline constexpr const char* kBackToken = "[back]";

/// Inserts one premature later step followed by the [back] marker:
/// steps[1..i] ++ steps[j] ++ "[back]" ++ steps[i+1..n], with j > i chosen
/// at random. Deleting the inserted (step, [back]) pair recovers the
/// original solution byte-exactly.
inline Document retro_augment(const ProblemRecord& record, std::mt19937_64& rng) {
    const auto n = record.steps.size();
    if (n < 2) throw std::runtime_error("retro_augment: need at least 2 steps");
    std::size_t i = rng() % n;             // insertion point: after steps[1..i], 0 = before all
    std::size_t j = i + 1 + rng() % (n - i); // donor step index in [i+1, n], 1-based
    std::vector<std::string> out;
    out.reserve(n + 2);
    for (std::size_t k = 0; k < i; ++k) out.push_back(record.steps[k]);
    out.push_back(record.steps[j - 1]);
    out.push_back(kBackToken);
    for (std::size_t k = i; k < n; ++k) out.push_back(record.steps[k]);

    std::string text;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k) text += "\n";
        text += out[k];
    }
    Document d = detail::make_synthetic_doc(SynthesisMethod::retrospective_enhancement, record.id, 0,
                                            std::move(text));
    d.metadata["insert_after"] = std::to_string(i);
    d.metadata["donor_step"] = std::to_string(j);
    if (!record.question.empty()) d.metadata["question"] = record.question;
    return d;
}

/// Inverse of retro_augment on the solution part: removes the line followed
/// by the [back] marker line. Returns the reconstructed step join.
inline std::string retro_invert(const std::string& augmented_solution) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : augmented_solution) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    lines.push_back(cur);
    std::vector<std::string> kept;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        if (k + 1 < lines.size() && lines[k + 1] == kBackToken) continue; // inserted donor
        if (lines[k] == kBackToken) continue;
        kept.push_back(lines[k]);
    }
    std::string out;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (k) out += "\n";
        out += kept[k];
    }
    return out;
}

struct SynthesisBudget {
    std::size_t max_requests = 0; // 0 = unlimited
    std::size_t max_tokens = 0;   // prompt + completion, 0 = unlimited
};

struct SynthesisConfig {
    std::string teacher_model = "teacher";
    std::string student_model = "student";
    double temperature = 0.7;
    int min_steps = 1;   // seed filter bounds
    int max_steps = 100;
    int retries = 3;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
};

/// The "Num"/"Tokens" bookkeeping for one synthesis run.
struct SynthesisStats {
    std::size_t seeds_total = 0;
    std::size_t seeds_filtered = 0; // dropped by the seed filter
    std::size_t attempted = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t failed = 0;          // gateway failure after retries
    std::size_t skipped_budget = 0;  // never attempted: budget exhausted
    std::size_t produced_records = 0;
    std::size_t produced_tokens = 0;
    std::size_t requests_used = 0;
    std::size_t gateway_tokens_used = 0;

    json to_json() const {
        return json{{"seeds_total", seeds_total},
                    {"seeds_filtered", seeds_filtered},
                    {"attempted", attempted},
                    {"accepted", accepted},
                    {"rejected", rejected},
                    {"failed", failed},
                    {"skipped_budget", skipped_budget},
                    {"produced_records", produced_records},
                    {"produced_tokens", produced_tokens},
                    {"requests_used", requests_used},
                    {"gateway_tokens_used", gateway_tokens_used}};
    }
};

namespace detail {

/// Shared request/token ledger. Acquire before sending; release nothing —
/// budget is a hard cap, not a rate.
class BudgetLedger {
public:
    explicit BudgetLedger(const SynthesisBudget& b) : budget_(b) {}

    bool try_acquire_request() {
        if (budget_.max_requests == 0) {
            requests_.fetch_add(1);
            return true;
        }
        std::size_t cur = requests_.load();
        while (cur < budget_.max_requests) {
            if (requests_.compare_exchange_weak(cur, cur + 1)) return true;
        }
        return false;
    }

    void add_tokens(std::size_t n) { tokens_.fetch_add(n); }

    bool tokens_exhausted() const {
        return budget_.max_tokens != 0 && tokens_.load() >= budget_.max_tokens;
    }

    std::size_t requests() const { return requests_.load(); }
    std::size_t tokens() const { return tokens_.load(); }

private:
    SynthesisBudget budget_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> tokens_{0};
};

inline bool passes_seed_filter(SynthesisMethod method, const ProblemRecord& seed,
                               const SynthesisConfig& cfg) {
    if (seed.question.empty()) return false;
    if (method != SynthesisMethod::tutorship_amplification && seed.solution.empty()) return false;
    if (method == SynthesisMethod::response_diversification && seed.final_answer.empty()) return false;
    int steps = 0;
    if (!seed.steps.empty()) {
        steps = static_cast<int>(seed.steps.size());
    } else if (!seed.solution.empty()) {
        steps = count_steps(seed.solution);
    } else {
        steps = 1;
    }
    if (method == SynthesisMethod::retrospective_enhancement && seed.steps.size() < 2) return false;
    return steps >= cfg.min_steps && steps <= cfg.max_steps;
}

} // namespace detail

/// Applies one synthesis method to a seed set. Retrospective enhancement is
/// purely local and never touches the gateway; the other three run a bounded
/// pool of concurrent gateway calls under a shared request/token budget.
/// Results and stats are independent of completion order.
inline std::pair<std::vector<SynthesisResult>, SynthesisStats>
synthesize(SynthesisMethod method, const std::vector<ProblemRecord>& seeds,
           std::shared_ptr<Gateway> gateway, const SynthesisBudget& budget,
           const SynthesisConfig& cfg, const Tokenizer& tok,
           const std::function<void(const SynthesisResult&)>& on_result = nullptr) {
    SynthesisStats stats;
    stats.seeds_total = seeds.size();
    std::vector<SynthesisResult> results(seeds.size());
    std::vector<int> outcome(seeds.size(), -1); // 0 filtered, 1 done, 2 failed, 3 skipped

    detail::BudgetLedger ledger(budget);

    auto process = [&](std::size_t i) {
        const auto& seed = seeds[i];
        if (!detail::passes_seed_filter(method, seed, cfg)) {
            outcome[i] = 0;
            return;
        }
        if (method == SynthesisMethod::retrospective_enhancement) {
            std::mt19937_64 rng(subseed(cfg.seed, "retro:" + seed.id));
            SynthesisResult r;
            r.method = method;
            r.seed_id = seed.id;
            r.accepted = true;
            r.produced.push_back(retro_augment(seed, rng));
            results[i] = std::move(r);
            outcome[i] = 1;
            return;
        }
        if (ledger.tokens_exhausted()) {
            outcome[i] = 3;
            return;
        }
        try {
            std::string student_answer;
            if (method == SynthesisMethod::tutorship_amplification) {
                if (!ledger.try_acquire_request()) {
                    outcome[i] = 3;
                    return;
                }
                auto sreq = build_prompt(method, seed, PromptRole::student);
                sreq.model = cfg.student_model;
                sreq.temperature = cfg.temperature;
                RetryingGateway retry(gateway, cfg.retries);
                auto sresp = retry.send(sreq);
                ledger.add_tokens(sresp.prompt_tokens + sresp.completion_tokens);
                student_answer = sresp.text;
            }
            if (!ledger.try_acquire_request()) {
                outcome[i] = 3;
                return;
            }
            auto req = build_prompt(method, seed, PromptRole::teacher, student_answer);
            req.model = cfg.teacher_model;
            req.temperature = cfg.temperature;
            RetryingGateway retry(gateway, cfg.retries);
            auto resp = retry.send(req);
            ledger.add_tokens(resp.prompt_tokens + resp.completion_tokens);
            results[i] = parse_response(method, seed, resp.text, student_answer);
            outcome[i] = 1;
        } catch (const GatewayError&) {
            outcome[i] = 2;
        }
    };

    if (cfg.jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < cfg.jobs; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= seeds.size()) return;
                    process(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        switch (outcome[i]) {
            case 0: ++stats.seeds_filtered; break;
            case 2:
                ++stats.attempted;
                ++stats.failed;
                break;
            case 3: ++stats.skipped_budget; break;
            case 1: {
                ++stats.attempted;
                const auto& r = results[i];
                if (r.accepted) {
                    ++stats.accepted;
                    stats.produced_records += r.produced.size();
                    for (auto& d : r.produced) stats.produced_tokens += tok.count(d.text);
                } else {
                    ++stats.rejected;
                }
                if (on_result) on_result(r);
                break;
            }
            default: break;
        }
    }
    stats.requests_used = ledger.requests();
    stats.gateway_tokens_used = ledger.tokens();
    return {std::move(results), stats};
}

} // namespace mathcorpus
