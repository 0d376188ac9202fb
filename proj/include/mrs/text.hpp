#pragma once

// Unicode-aware text primitives shared by indexing, matching, features and
// the baseline readers. Backed by ICU.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mrs/error.hpp"

namespace mrs::text {

/// NFC-normalizes a UTF-8 string.
inline std::string nfc(std::string_view input) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    auto source = icu::UnicodeString::fromUTF8(
        icu::StringPiece(input.data(), static_cast<int32_t>(input.size())));
    if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) return std::string(input);
    status = U_ZERO_ERROR;
    icu::UnicodeString normalized = normalizer->normalize(source, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

struct Token {
    std::string text;       ///< lowercased, NFC
    std::size_t begin = 0;  ///< byte offset into the source string
    std::size_t end = 0;    ///< one past the last byte
};

namespace detail {

inline bool is_word_char(UChar32 c) {
    if (c < 0) return false;
    if (u_isalnum(c)) return true;
    const auto type = static_cast<UCharCategory>(u_charType(c));
    return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK;
}

inline void append_utf8(std::string& out, UChar32 c) {
    char buffer[U8_MAX_LENGTH];
    int32_t length = 0;
    U8_APPEND_UNSAFE(buffer, length, c);
    out.append(buffer, static_cast<std::size_t>(length));
}

}  // namespace detail

/// Splits text into maximal runs of letters, digits and combining marks.
/// Everything else (whitespace, punctuation, symbols, invalid bytes) separates
/// tokens. Tokens are lowercased with simple case mapping, then NFC-normalized.
inline std::vector<Token> tokenize_with_offsets(std::string_view input) {
    std::vector<Token> tokens;
    const auto* bytes = reinterpret_cast<const uint8_t*>(input.data());
    const auto length = static_cast<int32_t>(input.size());
    int32_t i = 0;
    Token current;
    bool in_token = false;
    bool ascii_only = true;
    auto flush = [&](std::size_t end) {
        if (!in_token) return;
        current.end = end;
        if (!ascii_only) current.text = nfc(current.text);
        tokens.push_back(std::move(current));
        current = Token{};
        in_token = false;
        ascii_only = true;
    };
    while (i < length) {
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(bytes, i, length, c);
        if (detail::is_word_char(c)) {
            if (!in_token) {
                in_token = true;
                current.begin = static_cast<std::size_t>(start);
            }
            if (c >= 0x80) ascii_only = false;
            detail::append_utf8(current.text, u_tolower(c));
        } else {
            flush(static_cast<std::size_t>(start));
        }
    }
    flush(input.size());
    return tokens;
}

inline std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> out;
    for (auto& token : tokenize_with_offsets(input)) out.push_back(std::move(token.text));
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view separator) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) out.append(separator);
        out.append(parts[i]);
    }
    return out;
}

inline const std::unordered_set<std::string>& negation_words() {
    static const std::unordered_set<std::string> words = {
        "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere",
        "cannot", "without", "isn", "wasn", "aren", "weren", "doesn", "didn",
        "don", "hasn", "haven", "hadn", "couldn", "shouldn", "wouldn"};
    return words;
}

/// Counts negation cues. Contractions tokenize as e.g. "isn" + "t", so the
/// stem carries the negation.
inline std::size_t count_negations(const std::vector<std::string>& tokens) {
    std::size_t count = 0;
    for (const auto& token : tokens) {
        if (negation_words().count(token) != 0) ++count;
    }
    return count;
}

}  // namespace mrs::text
