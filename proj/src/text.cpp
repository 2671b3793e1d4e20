#include "clakg/text.hpp"

#include <charconv>
#include <optional>
#include <tuple>

namespace clakg::text {

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

constexpr std::string_view kIdeographicSpace = "\xE3\x80\x80";

std::optional<unsigned> parse_unsigned(std::string_view s) {
    if (s.empty()) return std::nullopt;
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

}  // namespace

std::string_view trim(std::string_view s) {
    for (;;) {
        if (!s.empty() && is_ascii_space(s.front())) {
            s.remove_prefix(1);
        } else if (s.starts_with(kIdeographicSpace)) {
            s.remove_prefix(kIdeographicSpace.size());
        } else {
            break;
        }
    }
    for (;;) {
        if (!s.empty() && is_ascii_space(s.back())) {
            s.remove_suffix(1);
        } else if (s.ends_with(kIdeographicSpace)) {
            s.remove_suffix(kIdeographicSpace.size());
        } else {
            break;
        }
    }
    return s;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

char32_t next_code_point(std::string_view s, std::size_t& pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char lead = byte(pos);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++pos;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char cont = byte(pos + i);
        if ((cont & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    pos += len;
    return cp;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0x20000 && cp <= 0x2A6DF) ||
           (cp >= 0xF900 && cp <= 0xFAFF);
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    bool boundary = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const char c = s[pos];
        if (is_ascii_alnum(c)) {
            std::size_t end = pos;
            while (end < s.size() && is_ascii_alnum(s[end])) ++end;
            tokens.push_back({to_lower_ascii(s.substr(pos, end - pos)), false, boundary});
            boundary = false;
            pos = end;
            continue;
        }
        if (is_ascii_space(c)) {
            ++pos;
            continue;
        }
        // Apostrophes inside words ("person's") neither split a phrase nor
        // produce a token.
        if (c == '\'') {
            ++pos;
            continue;
        }
        const char32_t cp = next_code_point(s, pos);
        if (is_cjk(cp)) {
            tokens.push_back({encode_utf8(cp), true, boundary});
            boundary = false;
        } else if (cp != 0x3000) {
            boundary = true;
        }
    }
    return tokens;
}

std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin && !tokens[i].cjk && !tokens[i - 1].cjk) out += ' ';
        out += tokens[i].text;
    }
    return out;
}

std::size_t count_occurrences(const std::vector<Token>& haystack, const std::vector<Token>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + needle.size() <= haystack.size();) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size() && match; ++j) match = haystack[i + j].text == needle[j].text;
        if (match) {
            ++count;
            i += needle.size();
        } else {
            ++i;
        }
    }
    return count;
}

std::string truncate_code_points(std::string_view s, std::size_t max_chars) {
    std::size_t pos = 0;
    for (std::size_t n = 0; n < max_chars && pos < s.size(); ++n) next_code_point(s, pos);
    return std::string(s.substr(0, pos));
}

bool is_valid_article_number(std::string_view s) {
    const auto dash = s.find('-');
    if (dash == std::string_view::npos) return all_digits(s);
    return all_digits(s.substr(0, dash)) && all_digits(s.substr(dash + 1));
}

bool article_number_less(std::string_view a, std::string_view b) {
    auto key = [](std::string_view s) -> std::optional<std::tuple<unsigned, unsigned>> {
        if (!is_valid_article_number(s)) return std::nullopt;
        const auto dash = s.find('-');
        const auto main = parse_unsigned(s.substr(0, dash));
        const auto sub = dash == std::string_view::npos ? std::optional<unsigned>(0) : parse_unsigned(s.substr(dash + 1));
        if (!main || !sub) return std::nullopt;
        return std::tuple{*main, *sub};
    };
    const auto ka = key(a);
    const auto kb = key(b);
    if (ka && kb) {
        if (*ka != *kb) return *ka < *kb;
        return a < b;
    }
    if (ka != kb) return ka.has_value();  // well-formed numbers sort first
    return a < b;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    const auto year = parse_unsigned(s.substr(0, 4));
    const auto month = parse_unsigned(s.substr(5, 2));
    const auto day = parse_unsigned(s.substr(8, 2));
    if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2))) return false;
    if (!year || !month || !day) return false;
    if (*month < 1 || *month > 12 || *day < 1) return false;
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (*year % 4 == 0 && *year % 100 != 0) || *year % 400 == 0;
    const unsigned limit = kDays[*month - 1] + (*month == 2 && leap ? 1 : 0);
    return *day <= limit;
}

}  // namespace clakg::text
