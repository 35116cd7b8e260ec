#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathcorpus {

/// Pluggable token counter. Three modes:
///   - whitespace: tokens are maximal non-whitespace runs
///   - bytes: one token per byte
///   - bpe: whitespace pre-tokenization, then greedy pair merges over the
///     bytes of each word, with the merge table loaded from a file of
///     "left right" lines in priority order
///
/// All modes are deterministic; the same text always yields the same count.
class Tokenizer {
public:
    enum class Kind { whitespace, bytes, bpe };

    Tokenizer() : kind_(Kind::whitespace) {}

    static Tokenizer whitespace() { return Tokenizer(Kind::whitespace); }
    static Tokenizer byte_level() { return Tokenizer(Kind::bytes); }

    static Tokenizer bpe_from_file(const std::string& merges_path) {
        std::ifstream in(merges_path);
        if (!in) {
            throw std::runtime_error("tokenizer: cannot open merges file: " + merges_path);
        }
        Tokenizer t(Kind::bpe);
        std::string line;
        int rank = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string a, b;
            if (!(ls >> a >> b)) {
                throw std::runtime_error("tokenizer: malformed merge line: " + line);
            }
            t.merges_[{a, b}] = rank++;
        }
        t.identifier_ = "bpe:" + merges_path;
        return t;
    }

    // "whitespace", "bytes", or "bpe:<merges path>"
    static Tokenizer from_spec(const std::string& spec) {
        if (spec.empty() || spec == "whitespace") return whitespace();
        if (spec == "bytes") return byte_level();
        if (spec.rfind("bpe:", 0) == 0) return bpe_from_file(spec.substr(4));
        throw std::runtime_error("tokenizer: unknown spec: " + spec);
    }

    const std::string& identifier() const { return identifier_; }

    std::size_t count(std::string_view text) const {
        switch (kind_) {
            case Kind::bytes:
                return text.size();
            case Kind::whitespace:
                return count_whitespace(text);
            case Kind::bpe:
                return count_bpe(text);
        }
        return 0;
    }

private:
    explicit Tokenizer(Kind k) : kind_(k) {
        identifier_ = (k == Kind::bytes) ? "bytes" : (k == Kind::bpe) ? "bpe" : "whitespace";
    }

    static bool is_space(char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }

    static std::size_t count_whitespace(std::string_view text) {
        std::size_t n = 0;
        bool in_tok = false;
        for (char c : text) {
            if (is_space(c)) {
                in_tok = false;
            } else if (!in_tok) {
                in_tok = true;
                ++n;
            }
        }
        return n;
    }

    std::size_t count_bpe(std::string_view text) const {
        std::size_t total = 0;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && is_space(text[i])) ++i;
            std::size_t j = i;
            while (j < text.size() && !is_space(text[j])) ++j;
            if (j > i) total += word_tokens(text.substr(i, j - i));
            i = j;
        }
        return total;
    }

    std::size_t word_tokens(std::string_view word) const {
        std::vector<std::string> parts;
        parts.reserve(word.size());
        for (char c : word) parts.emplace_back(1, c);
        // Greedy lowest-rank merge until no merge applies.
        while (parts.size() > 1) {
            int best_rank = -1;
            std::size_t best_pos = 0;
            for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
                auto it = merges_.find({parts[k], parts[k + 1]});
                if (it != merges_.end() && (best_rank < 0 || it->second < best_rank)) {
                    best_rank = it->second;
                    best_pos = k;
                }
            }
            if (best_rank < 0) break;
            parts[best_pos] += parts[best_pos + 1];
            parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
        }
        return parts.size();
    }

    Kind kind_;
    std::map<std::pair<std::string, std::string>, int> merges_;
    std::string identifier_;
};

} // namespace mathcorpus
