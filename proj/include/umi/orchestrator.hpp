#pragma once

#include <memory>
#include <optional>
#include <string>

#include "umi/backend.hpp"
#include "umi/templates.hpp"
#include "umi/tools.hpp"
#include "umi/trajectory.hpp"

namespace umi {

struct AgentConfig {
    std::shared_ptr<Backend> planner;
    std::shared_ptr<Backend> caller;
    std::shared_ptr<Backend> summarizer;
    RoleTemplate planner_template =
        RoleTemplate::builtin(Role::Planner, PromptMode::ToolUse);
    RoleTemplate caller_template =
        RoleTemplate::builtin(Role::Caller, PromptMode::ToolUse);
    RoleTemplate summarizer_template =
        RoleTemplate::builtin(Role::Summarizer, PromptMode::ToolUse);
    std::shared_ptr<const ToolRegistry> registry;
    int max_steps = 12;
    std::size_t observation_budget = 1024;
    std::size_t prompt_budget = 24000;
};

struct RunCounters {
    int planner_calls = 0;
    int caller_calls = 0;
    int tool_calls = 0;
    int parse_failures = 0;
    int hallucinations = 0;
};

struct RunResult {
    Trajectory trajectory;
    Outcome outcome = Outcome::Finished;
    std::optional<std::string> final_answer;
    RunCounters counters;
};

enum class StepSignal { Continue, Terminate };

// History slot content: the instruction followed by the rendered step blocks,
// oldest blocks dropped first when the character budget is exceeded.
std::string build_history(const Instruction& q, const Trajectory& t,
                          std::size_t upto, std::size_t budget);

// One planner turn plus whatever it routes to. A terminating step (conclusion,
// give up, parse error, backend error) updates result.outcome.
StepSignal execute_step(const AgentConfig& cfg, const Instruction& q,
                        RunResult& result);

// Planner -> decision routing -> caller -> tool loop until a terminal
// decision or the step cap.
RunResult run_instruction(const AgentConfig& cfg, const Instruction& q);

// Human-readable transcript of a finished run.
std::string format_transcript(const RunResult& result);

}  // namespace umi
