#include "umi/parser.hpp"

#include <algorithm>
#include <cctype>

namespace umi {

namespace {

constexpr std::string_view kMarker = "Next:";

bool iequal(char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
}

// Last case-insensitive occurrence of kMarker, npos if absent.
std::size_t find_last_marker(std::string_view text) {
    if (text.size() < kMarker.size()) return std::string_view::npos;
    for (std::size_t i = text.size() - kMarker.size() + 1; i-- > 0;) {
        bool match = true;
        for (std::size_t k = 0; k < kMarker.size(); ++k)
            if (!iequal(text[i + k], kMarker[k])) { match = false; break; }
        if (match) return i;
    }
    return std::string_view::npos;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' ||
           c == '?' || c == '"' || c == '\'' || c == ')' || c == ']';
}

// A token word must end at whitespace, punctuation, or end of text.
bool word_boundary(std::string_view rest, std::size_t len) {
    if (rest.size() == len) return true;
    char c = rest[len];
    return is_space(c) || is_punct(c);
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (!iequal(s[i], prefix[i])) return false;
    return true;
}

std::optional<Decision> match_token(std::string_view after) {
    // Trim leading whitespace and stray punctuation before the token.
    std::size_t b = 0;
    while (b < after.size() && (is_space(after[b]) || is_punct(after[b]))) ++b;
    after.remove_prefix(b);
    if (istarts_with(after, "caller") && word_boundary(after, 6))
        return Decision::Caller;
    if (istarts_with(after, "conclusion") && word_boundary(after, 10))
        return Decision::Summarizer;
    if (istarts_with(after, "give")) {
        std::string_view rest = after.substr(4);
        std::size_t ws = 0;
        while (ws < rest.size() && is_space(rest[ws])) ++ws;
        if (ws > 0 && istarts_with(rest.substr(ws), "up") &&
            word_boundary(rest, ws + 2))
            return Decision::GiveUp;
    }
    return std::nullopt;
}

std::optional<nlohmann::json> parse_object(std::string_view s) {
    nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

// Bounded repair: strip trailing commas before } or ], and normalize single
// quotes to double quotes. Anything beyond that stays a parse failure.
std::string repair(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == ',') {
            std::size_t k = i + 1;
            while (k < s.size() && is_space(s[k])) ++k;
            if (k < s.size() && (s[k] == '}' || s[k] == ']')) continue;
        }
        out.push_back(c == '\'' ? '"' : c);
    }
    return out;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

ParseResult<PlannerOutput> parse_planner_output(std::string_view text) {
    std::size_t pos = find_last_marker(text);
    if (pos == std::string_view::npos)
        return ParseResult<PlannerOutput>::fail(ParseErrorKind::NoDecisionToken,
                                                "no \"Next:\" marker");
    auto decision = match_token(text.substr(pos + kMarker.size()));
    if (!decision)
        return ParseResult<PlannerOutput>::fail(
            ParseErrorKind::UnknownToken,
            "unrecognized token after \"Next:\"");
    PlannerOutput out;
    out.rationale = trim(text.substr(0, pos));
    out.decision = *decision;
    out.raw = std::string(text);
    return ParseResult<PlannerOutput>::success(std::move(out));
}

ParseResult<ActionRecord> parse_caller_output(std::string_view text) {
    std::size_t apos = text.find("Action:");
    if (apos == std::string_view::npos)
        return ParseResult<ActionRecord>::fail(
            ParseErrorKind::MissingActionHeader, "no \"Action:\" line");
    std::size_t name_begin = apos + 7;
    std::size_t eol = text.find('\n', name_begin);
    if (eol == std::string_view::npos) eol = text.size();
    std::size_t ipos = text.find("Action Input:", eol);
    if (ipos == std::string_view::npos)
        return ParseResult<ActionRecord>::fail(
            ParseErrorKind::MissingActionInput, "no \"Action Input:\" line");
    ActionRecord rec;
    rec.name = trim(text.substr(name_begin, eol - name_begin));
    // Generated names sometimes carry a trailing comma on the line.
    while (!rec.name.empty() && (rec.name.back() == ',' || rec.name.back() == '.'))
        rec.name.pop_back();
    if (rec.name.empty())
        return ParseResult<ActionRecord>::fail(
            ParseErrorKind::MissingActionHeader, "empty action name");
    rec.raw_input = trim(text.substr(ipos + 13));
    rec.args = parse_action_input(rec.raw_input);
    return ParseResult<ActionRecord>::success(std::move(rec));
}

std::optional<nlohmann::json> parse_action_input(std::string_view raw) {
    std::string s = trim(raw);
    if (auto j = parse_object(s)) return j;
    // Logs wrap the JSON object in one layer of double quotes inconsistently.
    std::string stripped = s;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        stripped = s.substr(1, s.size() - 2);
        if (auto j = parse_object(stripped)) return j;
    }
    if (auto j = parse_object(repair(stripped))) return j;
    return std::nullopt;
}

bool detect_hallucination(std::string_view name,
                          const std::set<std::string>& tools) {
    return tools.count(trim(name)) == 0;
}

}  // namespace umi
