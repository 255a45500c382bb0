#pragma once
// Small string/text helpers shared across the pipeline. Normalization here
// defines node identity for coalescing, so changes ripple into every graph.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ig {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Collapse internal whitespace runs to single spaces, trimming the ends.
inline std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // leading whitespace dropped
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            in_ws = false;
            out.push_back(c);
        }
    }
    return out;
}

// Canonical phrase form: lowercase, whitespace-collapsed, trailing periods
// stripped. Node coalescing for intentions/concepts/items keys on this.
inline std::string normalize_phrase(std::string_view s) {
    std::string out = collapse_ws(to_lower(s));
    while (!out.empty() && (out.back() == '.' || is_space(out.back()))) out.pop_back();
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline size_t word_count(std::string_view s) { return split_ws(s).size(); }

// Lowercase alphanumeric runs; splits on whitespace and punctuation alike.
// This is the embedding tokenizer.
inline std::vector<std::string> tokenize_alnum(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// FNV-1a, the project-wide stable hash (embedding buckets, mock scores,
// config fingerprints). Must never change: frozen test values depend on it.
inline uint64_t fnv1a64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL) {
    uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace ig
