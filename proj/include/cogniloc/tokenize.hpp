#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace cogniloc {

namespace detail {

inline bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline bool is_upper(char c) {
    return std::isupper(static_cast<unsigned char>(c)) != 0;
}

inline bool is_lower(char c) {
    return std::islower(static_cast<unsigned char>(c)) != 0;
}

inline char to_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Splits one alphanumeric run at camelCase boundaries: before a lower->upper
// transition ("restoreSnapshot") and before the last capital of an acronym
// followed by a lowercase letter ("HTTPServer" -> HTTP, Server).
inline void split_camel(std::string_view run, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < run.size(); ++i) {
        const bool lower_to_upper = is_lower(run[i - 1]) && is_upper(run[i]);
        const bool acronym_end = i + 1 < run.size() && is_upper(run[i - 1]) && is_upper(run[i]) &&
                                 is_lower(run[i + 1]);
        if (lower_to_upper || acronym_end) {
            out.emplace_back(run.substr(start, i - start));
            start = i;
        }
    }
    out.emplace_back(run.substr(start));
}

}  // namespace detail

/// Code-aware tokenizer shared by the index and the search side: splits on
/// non-alphanumerics (which covers snake_case), splits camelCase, lowercases,
/// and drops single-character tokens. No stemming.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> pieces;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!detail::is_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && detail::is_alnum(text[i])) {
            ++i;
        }
        detail::split_camel(text.substr(begin, i - begin), pieces);
    }

    std::vector<std::string> tokens;
    tokens.reserve(pieces.size());
    for (auto& piece : pieces) {
        if (piece.size() < 2) {
            continue;
        }
        for (auto& c : piece) {
            c = detail::to_lower(c);
        }
        tokens.push_back(std::move(piece));
    }
    return tokens;
}

}  // namespace cogniloc
