#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

namespace mathcorpus {

/// Suffix automaton over raw bytes. Built once per document, then any number
/// of query strings can be streamed through it to find the longest exact
/// common substring in O(|query|).
class SuffixAutomaton {
public:
    explicit SuffixAutomaton(std::string_view s) {
        states_.reserve(2 * s.size() + 2);
        states_.push_back(State{}); // root
        states_[0].len = 0;
        states_[0].link = -1;
        last_ = 0;
        for (unsigned char c : s) extend(c);
    }

    /// Length of the longest substring common to the built string and `q`.
    std::size_t longest_common_substring(std::string_view q) const {
        std::size_t best = 0;
        int v = 0;
        std::size_t l = 0;
        for (unsigned char c : q) {
            while (v != 0 && !states_[v].next.count(c)) {
                v = states_[v].link;
                l = static_cast<std::size_t>(states_[v].len);
            }
            auto it = states_[v].next.find(c);
            if (it != states_[v].next.end()) {
                v = it->second;
                ++l;
            } else {
                v = 0;
                l = 0;
            }
            if (l > best) best = l;
        }
        return best;
    }

private:
    struct State {
        int len = 0;
        int link = -1;
        std::map<unsigned char, int> next;
    };

    void extend(unsigned char c) {
        int cur = static_cast<int>(states_.size());
        states_.push_back(State{});
        states_[cur].len = states_[last_].len + 1;
        int p = last_;
        while (p != -1 && !states_[p].next.count(c)) {
            states_[p].next[c] = cur;
            p = states_[p].link;
        }
        if (p == -1) {
            states_[cur].link = 0;
        } else {
            int q = states_[p].next[c];
            if (states_[p].len + 1 == states_[q].len) {
                states_[cur].link = q;
            } else {
                int clone = static_cast<int>(states_.size());
                states_.push_back(states_[q]);
                states_[clone].len = states_[p].len + 1;
                while (p != -1 && states_[p].next[c] == q) {
                    states_[p].next[c] = clone;
                    p = states_[p].link;
                }
                states_[q].link = clone;
                states_[cur].link = clone;
            }
        }
        last_ = cur;
    }

    std::vector<State> states_;
    int last_ = 0;
};

/// Exact longest common substring in bytes.
inline std::size_t longest_common_substring_bytes(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    // Build on the shorter side.
    if (a.size() > b.size()) std::swap(a, b);
    SuffixAutomaton sa(a);
    return sa.longest_common_substring(b);
}

} // namespace mathcorpus
