#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mathcorpus {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration file. Lines starting with '#' and blank
/// lines are ignored. Unknown keys are rejected by name so a typo fails
/// loudly instead of silently using a default.
class PipelineConfig {
public:
    PipelineConfig() = default;

    static PipelineConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        PipelineConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
            }
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
            }
            if (!known_keys().count(key)) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
            if (cfg.values_.count(key)) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            }
            cfg.values_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected an integer, got '" + it->second + "'");
        }
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected a number, got '" + it->second + "'");
        }
    }

    /// Validates value ranges and that configured input paths exist.
    void validate() const {
        check_positive("shingle_bytes");
        check_positive("permutations");
        check_positive("bands");
        check_positive("rows_per_band");
        check_positive("dedup_threshold_bytes");
        check_positive("decontam_threshold_bytes");
        check_positive("steps");
        check_positive("batch_size");
        check_positive("context_length");
        check_positive("jobs");
        if (has("bands") && has("rows_per_band") && has("permutations") &&
            get_int("bands", 0) * get_int("rows_per_band", 0) != get_int("permutations", 0)) {
            throw ConfigError("config: bands * rows_per_band must equal permutations");
        }
        for (const char* k : {"validation_fraction"}) {
            if (has(k)) {
                double v = get_double(k, 0.0);
                if (v < 0.0 || v >= 1.0) {
                    throw ConfigError(std::string("config key '") + k + "' must be in [0, 1)");
                }
            }
        }
        for (const char* k : {"exemplars_gsm8k", "exemplars_math", "tokenizer_merges", "eval_items"}) {
            if (has(k) && !std::filesystem::exists(get(k))) {
                throw ConfigError(std::string("config key '") + k + "': path does not exist: " + get(k));
            }
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    void set(const std::string& key, const std::string& value) {
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
        values_[key] = value;
    }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    void check_positive(const std::string& key) const {
        if (has(key) && get_int(key, 1) <= 0) {
            throw ConfigError("config key '" + key + "' must be positive");
        }
    }

    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys{
            "seed",
            "jobs",
            "tokenizer",
            "tokenizer_merges",
            // overlap detection
            "shingle_bytes",
            "permutations",
            "bands",
            "rows_per_band",
            "dedup_threshold_bytes",
            "decontam_threshold_bytes",
            // mixture planning
            "general_budget",
            "math_corpus_budget",
            "problem_budget",
            "synthetic_budget",
            "max_epochs",
            "steps",
            "batch_size",
            "context_length",
            "general_ratio",
            "math_ratio",
            "corpus_ratio",
            "problem_ratio",
            "validation_fraction",
            // synthesis
            "gateway",
            "teacher_model",
            "student_model",
            "max_requests",
            "max_gateway_tokens",
            // evaluation
            "eval_items",
            "exemplars_gsm8k",
            "exemplars_math",
            "comparator_gateway",
            "zero_shot_template",
        };
        return keys;
    }

    std::map<std::string, std::string> values_;
};

} // namespace mathcorpus
