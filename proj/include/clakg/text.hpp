#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clakg::text {

// Strips ASCII whitespace and the ideographic space U+3000.
std::string_view trim(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// Decodes one UTF-8 code point starting at pos and advances pos. Invalid
// bytes decode as U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);

std::string encode_utf8(char32_t cp);

bool is_cjk(char32_t cp);

// A token is either a lower-cased ASCII alphanumeric run or a single CJK
// code point. Whitespace and punctuation separate tokens; punctuation also
// breaks phrases, which shows up as a `boundary_before` flag.
struct Token {
    std::string text;
    bool cjk = false;
    bool boundary_before = false;
};

std::vector<Token> tokenize(std::string_view s);

// Tokens joined back into a phrase: ASCII words with single spaces,
// CJK characters without separators.
std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

// Non-overlapping occurrences of `needle` as a contiguous token run.
// Phrase boundaries inside the haystack are ignored.
std::size_t count_occurrences(const std::vector<Token>& haystack, const std::vector<Token>& needle);

// Leading code points of s, at most max_chars of them.
std::string truncate_code_points(std::string_view s, std::size_t max_chars);

// "385" or "133-1" (supplementary articles).
bool is_valid_article_number(std::string_view s);

// Numeric order on the main and supplementary parts, falling back to plain
// string order for anything that does not parse.
bool article_number_less(std::string_view a, std::string_view b);

// Strict YYYY-MM-DD with calendar validation (leap years included).
bool is_iso_date(std::string_view s);

}  // namespace clakg::text
