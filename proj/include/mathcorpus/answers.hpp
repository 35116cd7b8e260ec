#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <optional>
#include <regex>
#include <string>

namespace mathcorpus {

/// Exact rational used to equate renderings like "1/2" and "0.5".
struct Rational {
    long long num = 0;
    long long den = 1;

    static std::optional<Rational> make(long long n, long long d) {
        if (d == 0) return std::nullopt;
        if (d < 0) {
            n = -n;
            d = -d;
        }
        long long g = std::gcd(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        return Rational{n, d};
    }

    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool mul_overflow(long long a, long long b, long long& out) {
    return __builtin_mul_overflow(a, b, &out);
}

} // namespace detail

/// Strips currency signs, thousands separators, percent signs, trailing
/// units and punctuation from a candidate answer string.
inline std::string normalize_answer_text(const std::string& raw) {
    std::string s = detail::trim(raw);
    // drop surrounding $ ... $ and leading currency
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        if (c == '$' || c == ',') continue;
        cleaned.push_back(c);
    }
    s = detail::trim(cleaned);
    // trailing sentence punctuation
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' || s.back() == ';')) {
        // keep a digit-adjacent dot only if it is a decimal point, which it
        // is not at the end of the string
        s.pop_back();
    }
    // trailing unit words after a number: "42 apples" -> "42"
    static const std::regex num_then_unit(R"(^([+-]?\d+(?:\.\d+)?(?:\s*/\s*\d+)?)\s*(?:%|[A-Za-z]+\.?)*$)");
    std::smatch m;
    if (std::regex_match(s, m, num_then_unit)) s = m[1].str();
    return detail::trim(s);
}

/// Parses integers, decimals and simple fractions to an exact rational.
inline std::optional<Rational> parse_rational(const std::string& raw) {
    std::string s = normalize_answer_text(raw);
    if (s.empty()) return std::nullopt;
    static const std::regex frac(R"(^([+-]?\d+)\s*/\s*([+-]?\d+)$)");
    static const std::regex dec(R"(^([+-]?)(\d+)(?:\.(\d+))?$)");
    std::smatch m;
    try {
        if (std::regex_match(s, m, frac)) {
            return Rational::make(std::stoll(m[1].str()), std::stoll(m[2].str()));
        }
        if (std::regex_match(s, m, dec)) {
            long long sign = m[1].str() == "-" ? -1 : 1;
            long long ip = std::stoll(m[2].str());
            std::string fs = m[3].matched ? m[3].str() : "";
            if (fs.size() > 15) fs = fs.substr(0, 15);
            long long den = 1;
            long long fp = 0;
            for (char c : fs) {
                long long d10;
                if (detail::mul_overflow(den, 10, d10)) return std::nullopt;
                den = d10;
                fp = fp * 10 + (c - '0');
            }
            long long scaled;
            if (detail::mul_overflow(ip, den, scaled)) return std::nullopt;
            return Rational::make(sign * (scaled + fp), den);
        }
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
    return std::nullopt;
}

/// Pulls the final answer out of a free-form model response. Priority:
/// last \boxed{...}, then the last "answer is ..." clause, then the last
/// standalone number.
inline std::optional<std::string> extract_final_answer(const std::string& output) {
    // last \boxed{...} with balanced braces
    std::size_t pos = output.rfind("\\boxed{");
    if (pos != std::string::npos) {
        std::size_t i = pos + 7;
        int depth = 1;
        std::string inner;
        while (i < output.size() && depth > 0) {
            char c = output[i++];
            if (c == '{') ++depth;
            if (c == '}') {
                --depth;
                if (depth == 0) break;
            }
            inner.push_back(c);
        }
        if (depth == 0) return detail::trim(inner);
    }

    static const std::regex answer_is(R"([Aa]nswer\s+is[:\s]*([^\n.]+(?:\.\d+)?))");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(output.begin(), output.end(), answer_is);
         it != std::sregex_iterator(); ++it) {
        last = detail::trim((*it)[1].str());
    }
    if (last && !last->empty()) return last;

    static const std::regex number(R"([+-]?\$?\d[\d,]*(?:\.\d+)?(?:\s*/\s*\d+)?%?)");
    std::optional<std::string> last_num;
    for (auto it = std::sregex_iterator(output.begin(), output.end(), number);
         it != std::sregex_iterator(); ++it) {
        last_num = it->str();
    }
    return last_num;
}

/// True when the two strings denote the same answer after normalization:
/// equal as exact rationals when both parse, else equal as normalized text.
inline bool answers_match(const std::string& a, const std::string& b) {
    auto ra = parse_rational(a);
    auto rb = parse_rational(b);
    if (ra && rb) return *ra == *rb;
    std::string na = normalize_answer_text(a);
    std::string nb = normalize_answer_text(b);
    std::transform(na.begin(), na.end(), na.begin(), [](unsigned char c) { return std::tolower(c); });
    std::transform(nb.begin(), nb.end(), nb.begin(), [](unsigned char c) { return std::tolower(c); });
    return !na.empty() && na == nb;
}

} // namespace mathcorpus
