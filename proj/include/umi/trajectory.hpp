#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace umi {

// Routing token emitted by the planner after its rationale.
enum class Decision { Caller, Summarizer, GiveUp };

// Token as it appears in model text: "caller", "conclusion", "give up".
std::string decision_token(Decision d);
// Wire form used in JSONL records: "caller", "summarizer", "give_up".
std::string decision_wire(Decision d);
std::optional<Decision> decision_from_wire(std::string_view s);

enum class Outcome { Finished, GaveUp, StepLimit, BackendError, ParseError };

std::string outcome_wire(Outcome o);
std::optional<Outcome> outcome_from_wire(std::string_view s);

struct Instruction {
    std::string id;
    std::string text;
    std::vector<std::string> tool_ids;
};

struct ActionRecord {
    std::string name;
    std::string raw_input;
    // Present iff raw_input parsed into an argument object.
    std::optional<nlohmann::json> args;
};

struct Step {
    int index = 0;
    std::string rationale;
    Decision decision = Decision::Caller;
    std::optional<ActionRecord> action;
    std::optional<std::string> observation;
    std::optional<std::string> answer;
};

struct Trajectory {
    Instruction instruction;
    std::vector<Step> steps;
    Outcome outcome = Outcome::Finished;
    // Optional evaluation group label (e.g. "in-domain"); empty means unset.
    std::string group;

    std::size_t n() const { return steps.size(); }
};

struct Violation {
    int step_index;  // -1 for trajectory-level violations
    std::string rule;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

ValidationResult validate_trajectory(const Trajectory& t);

// The assistant-turn text of a step without the "Thought: " label:
// "<rationale> Next: <token>" (just "Next: <token>" when the rationale is empty).
std::string assistant_thought(const Step& s);

// One labeled history block for a step, each line terminated by '\n'.
// Layout: Thought / Action / Action Input / Observation, absent parts omitted;
// a terminal answer is emitted as "Conclusion: <answer>".
std::string render_step_block(const Step& s);

// Concatenation of the blocks for steps [0, upto). Deterministic and
// prefix-monotone in upto. Throws std::out_of_range when upto > t.n().
std::string render_history(const Trajectory& t, std::size_t upto);

nlohmann::json trajectory_to_json(const Trajectory& t);
// Throws std::runtime_error naming the missing/malformed field.
Trajectory trajectory_from_json(const nlohmann::json& j);

struct ReadReport {
    std::vector<Trajectory> trajectories;
    // (1-based line number, message) for lines that failed to parse.
    std::vector<std::pair<int, std::string>> errors;
};

ReadReport read_trajectories(std::istream& in);
// Throws std::runtime_error when the file cannot be opened.
ReadReport read_trajectories_file(const std::string& path);

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& ts);

}  // namespace umi
