#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"

namespace skillcalc {

// The 17-symbol alphabet. Ids are dense and stable:
//   0..9 digits, 10 '+', 11 '-', 12 '*', 13 '/', 14 '(', 15 ')', 16 blank.
// Canonical external form is ASCII; the tokenizer additionally accepts the
// display forms '×' (U+00D7), '÷' (U+00F7) and '·' (U+00B7) and normalizes
// them, so round-tripping is exact on canonical strings.
using Token = std::uint8_t;
using TokenSeq = std::vector<Token>;

inline constexpr int kNumTokens = 17;
inline constexpr Token kPlus = 10;
inline constexpr Token kMinus = 11;
inline constexpr Token kTimes = 12;
inline constexpr Token kDivide = 13;
inline constexpr Token kLParen = 14;
inline constexpr Token kRParen = 15;
inline constexpr Token kBlank = 16;

inline bool is_digit_token(Token t) { return t < 10; }
inline bool is_operator_token(Token t) { return t >= kPlus && t <= kDivide; }

inline char token_to_char(Token t) {
    static constexpr char table[kNumTokens + 1] = "0123456789+-*/()#";
    return t < kNumTokens ? (t == kBlank ? '\0' : table[t]) : '?';
}

inline std::string detokenize(const TokenSeq& seq) {
    std::string out;
    out.reserve(seq.size() + 2);
    for (Token t : seq) {
        if (t == kBlank) out += "·";
        else out += token_to_char(t);
    }
    return out;
}

// Display form with multiplication/division signs, used by traces and tables.
inline std::string pretty(const TokenSeq& seq) {
    std::string out;
    for (Token t : seq) {
        switch (t) {
            case kTimes: out += "×"; break;
            case kDivide: out += "÷"; break;
            case kBlank: out += "·"; break;
            default: out += token_to_char(t);
        }
    }
    return out;
}

inline TokenSeq tokenize(const std::string& text) {
    if (text.empty()) throw EmptySequence();
    TokenSeq out;
    out.reserve(text.size());
    std::size_t char_pos = 0;
    for (std::size_t i = 0; i < text.size(); ++i, ++char_pos) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c >= '0' && c <= '9') { out.push_back(static_cast<Token>(c - '0')); continue; }
        switch (c) {
            case '+': out.push_back(kPlus); continue;
            case '-': out.push_back(kMinus); continue;
            case '*': out.push_back(kTimes); continue;
            case '/': out.push_back(kDivide); continue;
            case '(': out.push_back(kLParen); continue;
            case ')': out.push_back(kRParen); continue;
            default: break;
        }
        // two-byte UTF-8 display forms
        if (i + 1 < text.size()) {
            const unsigned char c2 = static_cast<unsigned char>(text[i + 1]);
            if (c == 0xc3 && c2 == 0x97) { out.push_back(kTimes); ++i; continue; }
            if (c == 0xc3 && c2 == 0xb7) { out.push_back(kDivide); ++i; continue; }
            if (c == 0xc2 && c2 == 0xb7) { out.push_back(kBlank); ++i; continue; }
        }
        throw UnknownCharacter(char_pos);
    }
    return out;
}

inline TokenSeq digits_of(const std::string& decimal) {
    return tokenize(decimal);
}

}  // namespace skillcalc
