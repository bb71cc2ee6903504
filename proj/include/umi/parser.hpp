#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "umi/trajectory.hpp"

namespace umi {

enum class ParseErrorKind {
    NoDecisionToken,
    UnknownToken,
    MissingActionHeader,
    MissingActionInput,
};

struct ParseFailure {
    ParseErrorKind kind;
    std::string detail;
};

// Parse failures are values, not exceptions.
template <typename T>
struct ParseResult {
    std::optional<T> value;
    std::optional<ParseFailure> failure;

    bool ok() const { return value.has_value(); }

    static ParseResult success(T v) { return {std::move(v), std::nullopt}; }
    static ParseResult fail(ParseErrorKind k, std::string detail = "") {
        return {std::nullopt, ParseFailure{k, std::move(detail)}};
    }
};

struct PlannerOutput {
    std::string rationale;
    Decision decision = Decision::Caller;
    std::string raw;
};

// Splits at the last case-insensitive "Next:" marker; the token after it maps
// caller -> Caller, conclusion -> Summarizer, "give up" -> GiveUp.
ParseResult<PlannerOutput> parse_planner_output(std::string_view text);

// Extracts "Action: <name>" (to end of line) and "Action Input: <raw>" (to end
// of text), then attempts parse_action_input on the raw request.
ParseResult<ActionRecord> parse_caller_output(std::string_view text);

// Strict object parse, then one layer of surrounding quotes stripped, then
// bounded lenient repair (trailing commas, single->double quotes). nullopt on
// failure; the caller keeps the raw text either way.
std::optional<nlohmann::json> parse_action_input(std::string_view raw);

// True iff the trimmed name is absent from the tool set (case-sensitive).
bool detect_hallucination(std::string_view name,
                          const std::set<std::string>& tools);

std::string trim(std::string_view s);

}  // namespace umi
