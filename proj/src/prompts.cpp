#include "clakg/prompts.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

#include "clakg/text.hpp"

namespace clakg::llm {

namespace {

constexpr std::string_view kFullWidthSemicolon = "\xEF\xBC\x9B";

void add_section(std::ostringstream& out, std::string_view header, std::string_view body) {
    if (out.tellp() > 0) out << "\n\n";
    out << header << '\n' << body;
}

std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

bool is_trailing_punct(char32_t cp) {
    switch (cp) {
        case '.': case ',': case '!': case '?': case ':': case '"': case '\'':
        case 0x3002:  // 。
        case 0xFF0C:  // ，
        case 0x3001:  // 、
        case 0xFF01:  // ！
        case 0xFF1F:  // ？
        case 0xFF1A:  // ：
        case 0x201D:  // ”
            return true;
        default:
            return false;
    }
}

// Removes trailing punctuation and whitespace until neither remains.
std::string_view strip_trailing_punct(std::string_view s) {
    for (;;) {
        s = text::trim(s);
        if (s.empty()) return s;
        // Walk back to the start of the last code point.
        std::size_t start = s.size() - 1;
        while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
        std::size_t pos = start;
        const char32_t cp = text::next_code_point(s, pos);
        if (!is_trailing_punct(cp)) return s;
        s = s.substr(0, start);
    }
}

std::optional<unsigned> chinese_digit(char32_t cp) {
    switch (cp) {
        case U'零': case U'〇': return 0;
        case U'一': return 1;
        case U'二': case U'两': return 2;
        case U'三': return 3;
        case U'四': return 4;
        case U'五': return 5;
        case U'六': return 6;
        case U'七': return 7;
        case U'八': return 8;
        case U'九': return 9;
        default: return std::nullopt;
    }
}

std::optional<unsigned> chinese_unit(char32_t cp) {
    switch (cp) {
        case U'十': return 10;
        case U'百': return 100;
        case U'千': return 1000;
        default: return std::nullopt;
    }
}

// 三百八十五 -> 385, 十五 -> 15, 一百零二 -> 102.
std::optional<unsigned> parse_chinese_numeral(std::u32string_view s) {
    if (s.empty()) return std::nullopt;
    unsigned total = 0;
    std::optional<unsigned> pending;
    for (char32_t cp : s) {
        if (auto d = chinese_digit(cp)) {
            pending = *d;
        } else if (auto u = chinese_unit(cp)) {
            total += pending.value_or(1) * *u;
            pending.reset();
        } else {
            return std::nullopt;
        }
    }
    if (pending) total += *pending;
    return total;
}

std::u32string decode(std::string_view s) {
    std::u32string out;
    std::size_t pos = 0;
    while (pos < s.size()) out += text::next_code_point(s, pos);
    return out;
}

ChatRequest make_request(std::string_view role, std::string user) {
    ChatRequest req;
    req.system = std::string(role);
    req.user = std::move(user);
    return req;
}

}  // namespace

ChatRequest prompt_key_matching(std::string_view case_text, std::span<const std::string> inventory, std::size_t limit) {
    const std::string n = std::to_string(limit);
    std::ostringstream user;
    add_section(user, section::kTask,
                "Given the available new case information and the following key information nodes, please output 0-" + n +
                    " key information nodes most relevant to the case. If you believe there are fewer than " + n +
                    " relevant key information nodes, there is no need to force the list to reach " + n + " nodes.");
    add_section(user, section::kNewCase, text::trim(case_text));
    add_section(user, section::kKeyNodes, join(inventory, "; "));
    add_section(user, section::kPrecautions,
                "Please directly output the key information nodes, separated by semicolons (;) without including any "
                "additional content (including unnecessary punctuation marks).");
    add_section(user, section::kOutputExample,
                "Public and private property; multiple thefts; sale; committing a crime; causing damage; seriously "
                "disrupting public order; multiple thefts; lawfully performing duties");
    return make_request(kKeyMatchingRole, user.str());
}

std::vector<std::vector<std::string>> chunk_inventory(std::span<const std::string> inventory, std::size_t max_chars) {
    std::vector<std::vector<std::string>> chunks;
    std::size_t used = 0;
    for (const std::string& phrase : inventory) {
        const std::size_t cost = phrase.size() + 2;  // "; " separator
        if (chunks.empty() || (used + cost > max_chars && !chunks.back().empty())) {
            chunks.emplace_back();
            used = 0;
        }
        chunks.back().push_back(phrase);
        used += cost;
    }
    return chunks;
}

ChatRequest prompt_recommendation(std::string_view case_text, std::span<const CandidateText> candidates,
                                  std::span<const PrecedentText> precedents) {
    if (candidates.empty()) throw Error(ErrorCode::NoCandidates, "recommendation prompt needs at least one candidate");

    std::ostringstream refs;
    if (precedents.empty()) {
        refs << "(no reference cases)";
    } else {
        for (std::size_t i = 0; i < precedents.size(); ++i) {
            const auto& p = precedents[i];
            if (i) refs << "\n\n";
            refs << "Case " << i + 1 << ": " << p.name << '\n';
            if (!p.session_time.empty()) refs << "Session time: " << p.session_time << '\n';
            refs << "Prosecution reason: " << p.reason << '\n';
            refs << "Specifics: " << p.specifics;
        }
    }

    std::ostringstream cands;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i) cands << "\n\n";
        cands << "Article " << candidates[i].number << ": " << text::trim(candidates[i].body);
    }

    std::ostringstream user;
    add_section(user, section::kTask,
                "Determine which of the candidate law articles apply to the new case. Use the reference cases, which "
                "were decided under these articles, to judge applicability, and only choose among the candidate law "
                "articles. Start the answer with the applicable article number(s) in the form \"Article N\", then "
                "explain briefly.");
    add_section(user, section::kNewCase, text::trim(case_text));
    add_section(user, section::kReferenceCases, refs.str());
    add_section(user, section::kCandidates, cands.str());
    add_section(user, section::kOutputExample,
                "Article 264. The defendant secretly took public and private property several times, which matches "
                "the theft provision.");
    return make_request(kRecommendationRole, user.str());
}

ChatRequest prompt_direct(std::string_view case_text) {
    std::ostringstream user;
    add_section(user, section::kTask,
                "Determine which article of the Criminal Law applies to the new case. Start the answer with the "
                "article number(s) in the form \"Article N\", then explain briefly.");
    add_section(user, section::kNewCase, text::trim(case_text));
    add_section(user, section::kOutputExample, "Article 264. The defendant secretly took property several times.");
    return make_request(kRecommendationRole, user.str());
}

ChatRequest prompt_followup(std::string_view system, std::span<const Turn> transcript, std::string_view question) {
    std::ostringstream user;
    add_section(user, section::kFollowup, text::trim(question));
    ChatRequest req = make_request(system, user.str());
    req.history.assign(transcript.begin(), transcript.end());
    return req;
}

ChatRequest prompt_extract_key_info(std::string_view article_body, std::size_t limit) {
    std::ostringstream user;
    add_section(user, section::kTask,
                "List the key facts, conditions and sanctions of this law article as short phrases, at most " +
                    std::to_string(limit) + " phrases.");
    add_section(user, section::kLawArticle, text::trim(article_body));
    add_section(user, section::kPrecautions,
                "Output only the phrases, separated by semicolons (;), without numbering or extra text.");
    add_section(user, section::kOutputExample, "public and private property; multiple thefts; fixed-term imprisonment");
    return make_request(kConstructionRole, user.str());
}

ChatRequest prompt_summarize_case(std::string_view facts, std::size_t max_chars) {
    std::ostringstream user;
    add_section(user, section::kTask,
                "Summarize the specifics of this case (who, what was done, amounts involved, aggravating or "
                "mitigating circumstances) in one paragraph of at most " +
                    std::to_string(max_chars) + " characters.");
    add_section(user, section::kCaseFacts, text::trim(facts));
    return make_request(kConstructionRole, user.str());
}

ChatRequest prompt_select_keys(std::string_view case_text, std::span<const std::string> candidates, std::size_t cap) {
    std::ostringstream user;
    add_section(user, section::kTask,
                "Select up to " + std::to_string(cap) +
                    " of the candidate key information nodes that are most relevant to the case, most relevant first.");
    add_section(user, section::kNewCase, text::trim(case_text));
    add_section(user, section::kCandidateKeys, join(candidates, "; "));
    add_section(user, section::kPrecautions,
                "Copy the selected nodes exactly as written, separated by semicolons (;), without extra text.");
    return make_request(kConstructionRole, user.str());
}

std::string_view section_body(std::string_view user_text, std::string_view header) {
    std::size_t start = std::string_view::npos;
    // Headers always begin a line.
    for (std::size_t pos = user_text.find(header); pos != std::string_view::npos; pos = user_text.find(header, pos + 1)) {
        if (pos == 0 || user_text[pos - 1] == '\n') {
            start = pos;
            break;
        }
    }
    if (start == std::string_view::npos) return {};
    std::size_t body = start + header.size();
    if (body < user_text.size() && user_text[body] == '\n') ++body;
    std::size_t end = user_text.find("\n\n[", body);
    if (end == std::string_view::npos) end = user_text.size();
    return user_text.substr(body, end - body);
}

std::vector<std::string> parse_semicolon_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    auto emit = [&](std::string_view piece) {
        piece = strip_trailing_punct(piece);
        if (!piece.empty()) out.emplace_back(piece);
    };
    while (pos <= text.size()) {
        const std::size_t ascii = text.find(';', pos);
        const std::size_t wide = text.find(kFullWidthSemicolon, pos);
        const std::size_t next = std::min(ascii, wide);
        if (next == std::string_view::npos) {
            emit(text.substr(pos));
            break;
        }
        emit(text.substr(pos, next - pos));
        pos = next + (next == wide ? kFullWidthSemicolon.size() : 1);
    }
    return out;
}

std::vector<std::string> parse_article_ids(std::string_view text) {
    std::map<std::size_t, std::string> by_position;
    const std::string s(text);

    static const std::regex kArticleList(
        R"(\barticles?\s+(\d+(?:-\d+)?)((?:\s*(?:,|&|and|or|\xEF\xBC\x8C|\xE3\x80\x81)\s*\d+(?:-\d+)?)*))",
        std::regex::icase);
    static const std::regex kNumber(R"(\d+(?:-\d+)?)");
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kArticleList); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        by_position.emplace(static_cast<std::size_t>(m.position(1)), m.str(1));
        const std::string tail = m.str(2);
        const auto tail_offset = static_cast<std::size_t>(m.position(2));
        for (auto n = std::sregex_iterator(tail.begin(), tail.end(), kNumber); n != std::sregex_iterator(); ++n)
            by_position.emplace(tail_offset + static_cast<std::size_t>(n->position(0)), n->str(0));
    }

    // 第N条 with Arabic or Chinese numerals.
    const std::string_view di = "\xE7\xAC\xAC";    // 第
    const std::string_view tiao = "\xE6\x9D\xA1";  // 条
    for (std::size_t pos = s.find(di); pos != std::string::npos; pos = s.find(di, pos + 1)) {
        const std::size_t begin = pos + di.size();
        const std::size_t end = s.find(tiao, begin);
        if (end == std::string::npos || end - begin > 24) continue;
        const std::string_view inner = text::trim(std::string_view(s).substr(begin, end - begin));
        if (text::is_valid_article_number(inner)) {
            by_position.emplace(begin, std::string(inner));
        } else if (auto value = parse_chinese_numeral(decode(inner))) {
            by_position.emplace(begin, std::to_string(*value));
        }
    }

    if (by_position.empty()) {
        const std::string_view whole = strip_trailing_punct(text);
        if (text::is_valid_article_number(whole)) by_position.emplace(0, std::string(whole));
    }

    std::vector<std::string> out;
    for (auto& [pos, number] : by_position)
        if (std::find(out.begin(), out.end(), number) == out.end()) out.push_back(number);
    if (out.empty()) throw Error(ErrorCode::NoArticleFound, "no article number in response");
    return out;
}

}  // namespace clakg::llm
