#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathcorpus/hash.hpp"
#include "mathcorpus/tokenizer.hpp"

namespace mathcorpus {

using json = nlohmann::json;

enum class Source { general, math_corpus, problem_solving, synthetic };

inline std::string to_string(Source s) {
    switch (s) {
        case Source::general: return "general";
        case Source::math_corpus: return "math-corpus";
        case Source::problem_solving: return "problem-solving";
        case Source::synthetic: return "synthetic";
    }
    return "general";
}

inline Source source_from_string(const std::string& s) {
    if (s == "general") return Source::general;
    if (s == "math-corpus") return Source::math_corpus;
    if (s == "problem-solving") return Source::problem_solving;
    if (s == "synthetic") return Source::synthetic;
    throw std::runtime_error("unknown source category: " + s);
}

inline const std::vector<Source>& all_sources() {
    static const std::vector<Source> v{Source::general, Source::math_corpus,
                                       Source::problem_solving, Source::synthetic};
    return v;
}

/// One training-corpus record.
struct Document {
    std::string id;
    Source source = Source::general;
    std::string text;
    std::size_t token_count = 0;
    std::map<std::string, std::string> metadata;
};

enum class Difficulty { easy, medium, hard, unclassified };

inline std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
        case Difficulty::unclassified: return "unclassified";
    }
    return "unclassified";
}

inline Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "medium") return Difficulty::medium;
    if (s == "hard") return Difficulty::hard;
    if (s == "unclassified") return Difficulty::unclassified;
    throw std::runtime_error("unknown difficulty: " + s);
}

/// A question/solution pair with parsed steps, knowledge tags, difficulty.
struct ProblemRecord {
    std::string id;
    std::string question;
    std::string solution;
    std::string final_answer;
    std::vector<std::string> steps;
    std::set<std::string> knowledge_tags;
    Difficulty difficulty = Difficulty::unclassified;
};

enum class EvalDataset { GSM8K, MATH, GAOKAO, ZHONGKAO };

inline std::string to_string(EvalDataset d) {
    switch (d) {
        case EvalDataset::GSM8K: return "GSM8K";
        case EvalDataset::MATH: return "MATH";
        case EvalDataset::GAOKAO: return "GAOKAO";
        case EvalDataset::ZHONGKAO: return "ZHONGKAO";
    }
    return "GSM8K";
}

inline EvalDataset eval_dataset_from_string(const std::string& s) {
    if (s == "GSM8K") return EvalDataset::GSM8K;
    if (s == "MATH") return EvalDataset::MATH;
    if (s == "GAOKAO") return EvalDataset::GAOKAO;
    if (s == "ZHONGKAO") return EvalDataset::ZHONGKAO;
    throw std::runtime_error("unknown eval dataset: " + s);
}

inline const std::vector<EvalDataset>& all_eval_datasets() {
    static const std::vector<EvalDataset> v{EvalDataset::GSM8K, EvalDataset::MATH,
                                            EvalDataset::GAOKAO, EvalDataset::ZHONGKAO};
    return v;
}

struct EvalItem {
    EvalDataset dataset = EvalDataset::GSM8K;
    std::string question;
    std::string reference_answer;
};

/// Per-source counts and token totals, recomputable from the documents.
struct CorpusManifest {
    int schema_version = 1;
    std::string tokenizer_id;
    std::map<std::string, std::size_t> doc_counts;   // keyed by source name
    std::map<std::string, std::size_t> token_totals; // keyed by source name
    std::vector<std::string> notes;

    void add(const Document& d) {
        doc_counts[to_string(d.source)] += 1;
        token_totals[to_string(d.source)] += d.token_count;
    }

    std::size_t total_documents() const {
        std::size_t n = 0;
        for (auto& [k, v] : doc_counts) n += v;
        return n;
    }

    std::size_t total_tokens() const {
        std::size_t n = 0;
        for (auto& [k, v] : token_totals) n += v;
        return n;
    }

    json to_json() const {
        json j;
        j["schema_version"] = schema_version;
        j["tokenizer"] = tokenizer_id;
        j["doc_counts"] = doc_counts;
        j["token_totals"] = token_totals;
        j["notes"] = notes;
        return j;
    }

    static CorpusManifest from_json(const json& j) {
        CorpusManifest m;
        m.schema_version = j.value("schema_version", 1);
        m.tokenizer_id = j.value("tokenizer", "");
        if (j.contains("doc_counts")) m.doc_counts = j["doc_counts"].get<std::map<std::string, std::size_t>>();
        if (j.contains("token_totals")) m.token_totals = j["token_totals"].get<std::map<std::string, std::size_t>>();
        if (j.contains("notes")) m.notes = j["notes"].get<std::vector<std::string>>();
        return m;
    }
};

inline CorpusManifest build_manifest(const std::vector<Document>& docs, const Tokenizer& tok) {
    CorpusManifest m;
    m.tokenizer_id = tok.identifier();
    for (auto& d : docs) m.add(d);
    return m;
}

// ---- line-delimited record io ----

inline json document_to_json(const Document& d) {
    json j;
    j["id"] = d.id;
    j["source"] = to_string(d.source);
    j["text"] = d.text;
    j["token_count"] = d.token_count;
    if (!d.metadata.empty()) j["metadata"] = d.metadata;
    return j;
}

inline Document document_from_json(const json& j, const Tokenizer& tok,
                                   std::optional<Source> default_source = std::nullopt) {
    if (!j.contains("text")) throw std::runtime_error("record missing \"text\" field");
    Document d;
    d.text = j["text"].get<std::string>();
    if (j.contains("source")) {
        d.source = source_from_string(j["source"].get<std::string>());
    } else if (default_source) {
        d.source = *default_source;
    } else {
        throw std::runtime_error("record missing \"source\" field");
    }
    if (j.contains("id") && !j["id"].get<std::string>().empty()) {
        d.id = j["id"].get<std::string>();
    } else {
        // Stable content-hash id; gives dedup a deterministic key.
        std::ostringstream os;
        os << "doc-" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(d.text);
        d.id = os.str();
    }
    if (j.contains("metadata")) d.metadata = j["metadata"].get<std::map<std::string, std::string>>();
    d.token_count = tok.count(d.text);
    return d;
}

struct IngestError {
    std::size_t line_number = 0; // 1-based
    std::string message;
};

struct IngestResult {
    std::vector<Document> documents;
    std::vector<IngestError> errors;
    CorpusManifest manifest;
};

/// Reads line-delimited JSON records; malformed lines are reported with
/// their line number and skipped, the rest still ingest.
inline IngestResult ingest(const std::string& path, Source source, const Tokenizer& tok) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    IngestResult r;
    r.manifest.tokenizer_id = tok.identifier();
    std::string line;
    std::size_t lineno = 0;
    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Document d = document_from_json(j, tok, source);
            if (!seen_ids.insert(d.id).second) {
                throw std::runtime_error("duplicate id within corpus: " + d.id);
            }
            r.manifest.add(d);
            r.documents.push_back(std::move(d));
        } catch (const std::exception& e) {
            r.errors.push_back({lineno, e.what()});
        }
    }
    return r;
}

inline std::vector<Document> read_documents(const std::string& path, const Tokenizer& tok) {
    IngestResult r = ingest(path, Source::general, tok);
    if (!r.errors.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(r.errors.front().line_number) +
                                 ": " + r.errors.front().message);
    }
    return std::move(r.documents);
}

inline void write_documents(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    for (auto& d : docs) out << document_to_json(d).dump() << "\n";
}

inline json problem_to_json(const ProblemRecord& p) {
    json j;
    j["id"] = p.id;
    j["question"] = p.question;
    j["solution"] = p.solution;
    j["final_answer"] = p.final_answer;
    j["steps"] = p.steps;
    j["tags"] = std::vector<std::string>(p.knowledge_tags.begin(), p.knowledge_tags.end());
    j["difficulty"] = to_string(p.difficulty);
    return j;
}

inline ProblemRecord problem_from_json(const json& j) {
    ProblemRecord p;
    p.question = j.value("question", "");
    p.solution = j.value("solution", "");
    p.final_answer = j.value("final_answer", "");
    if (j.contains("id") && !j["id"].get<std::string>().empty()) {
        p.id = j["id"].get<std::string>();
    } else {
        std::ostringstream os;
        os << "prob-" << std::hex << std::setw(16) << std::setfill('0')
           << fnv1a64(p.question + "\x1f" + p.solution);
        p.id = os.str();
    }
    if (j.contains("steps")) p.steps = j["steps"].get<std::vector<std::string>>();
    if (j.contains("tags")) {
        for (auto& t : j["tags"]) p.knowledge_tags.insert(t.get<std::string>());
    }
    if (j.contains("difficulty")) p.difficulty = difficulty_from_string(j["difficulty"].get<std::string>());
    return p;
}

inline std::vector<ProblemRecord> read_problems(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::vector<ProblemRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(problem_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void write_problems(const std::string& path, const std::vector<ProblemRecord>& probs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    for (auto& p : probs) out << problem_to_json(p).dump() << "\n";
}

inline std::vector<EvalItem> read_eval_items(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open eval file: " + path);
    std::vector<EvalItem> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            EvalItem it;
            it.dataset = eval_dataset_from_string(j.at("dataset").get<std::string>());
            it.question = j.at("question").get<std::string>();
            it.reference_answer = j.at("reference_answer").get<std::string>();
            if (it.reference_answer.empty()) throw std::runtime_error("empty reference_answer");
            out.push_back(std::move(it));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace mathcorpus
