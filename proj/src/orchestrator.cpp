#include "umi/orchestrator.hpp"

#include <set>

#include "umi/parser.hpp"

namespace umi {

namespace {

// Tool docs for the instruction's available set, in instruction order.
ToolDocs docs_for_instruction(const AgentConfig& cfg, const Instruction& q) {
    if (q.tool_ids.empty()) return {"(no apis available)", ""};
    std::vector<ToolSpec> specs;
    for (const std::string& id : q.tool_ids) {
        const ToolSpec* spec = cfg.registry ? cfg.registry->find(id) : nullptr;
        if (spec) {
            specs.push_back(*spec);
        } else {
            ToolSpec stub;
            stub.name = id;
            specs.push_back(std::move(stub));
        }
    }
    return format_tool_docs(specs);
}

PromptContext base_context(const Instruction& q, const ToolDocs& docs,
                           std::string history) {
    PromptContext ctx;
    ctx.tool_docs = docs.doc;
    ctx.tool_names = docs.tool_names;
    ctx.instruction = q.text;
    ctx.history = std::move(history);
    return ctx;
}

}  // namespace

std::string build_history(const Instruction& q, const Trajectory& t,
                          std::size_t upto, std::size_t budget) {
    std::vector<std::string> blocks;
    blocks.reserve(upto);
    for (std::size_t i = 0; i < upto && i < t.steps.size(); ++i)
        blocks.push_back(render_step_block(t.steps[i]));
    std::size_t total = q.text.size() + 1;
    for (const std::string& b : blocks) total += b.size();
    // Keep the instruction and the most recent steps; drop oldest first.
    std::size_t first = 0;
    while (first < blocks.size() && total > budget)
        total -= blocks[first++].size();
    std::string out = q.text + "\n";
    for (std::size_t i = first; i < blocks.size(); ++i) out += blocks[i];
    return out;
}

StepSignal execute_step(const AgentConfig& cfg, const Instruction& q,
                        RunResult& result) {
    Trajectory& traj = result.trajectory;
    RunCounters& c = result.counters;
    const ToolDocs docs = docs_for_instruction(cfg, q);
    const std::string history =
        build_history(q, traj, traj.steps.size(), cfg.prompt_budget);

    std::string planner_text;
    try {
        ++c.planner_calls;
        planner_text = cfg.planner->generate(
            {render_prompt(cfg.planner_template, base_context(q, docs, history)),
             Role::Planner,
             {}});
    } catch (const BackendError&) {
        result.outcome = Outcome::BackendError;
        return StepSignal::Terminate;
    }

    auto planner = parse_planner_output(planner_text);
    if (!planner.ok()) {
        ++c.parse_failures;
        result.outcome = Outcome::ParseError;
        return StepSignal::Terminate;
    }

    Step step;
    step.index = static_cast<int>(traj.steps.size());
    step.rationale = planner.value->rationale;
    step.decision = planner.value->decision;

    switch (planner.value->decision) {
        case Decision::Caller: {
            PromptContext ctx = base_context(q, docs, history);
            ctx.thought = planner.value->rationale;
            std::string caller_text;
            try {
                ++c.caller_calls;
                caller_text = cfg.caller->generate(
                    {render_prompt(cfg.caller_template, ctx), Role::Caller, {}});
            } catch (const BackendError&) {
                result.outcome = Outcome::BackendError;
                return StepSignal::Terminate;
            }
            auto action = parse_caller_output(caller_text);
            if (!action.ok()) {
                // Malformed output is fed back so the planner can replan.
                ++c.parse_failures;
                step.action = ActionRecord{"", trim(caller_text), std::nullopt};
                step.observation = "malformed action";
            } else {
                ++c.tool_calls;
                std::set<std::string> available(q.tool_ids.begin(),
                                                q.tool_ids.end());
                ToolResult tool;
                if (detect_hallucination(action.value->name, available)) {
                    ++c.hallucinations;
                    tool.status = ToolStatus::ToolError;
                    tool.observation =
                        "tool not found: " + trim(action.value->name);
                } else {
                    tool = invoke_tool(*cfg.registry, *action.value);
                }
                step.action = std::move(*action.value);
                step.observation =
                    truncate_observation(tool.observation,
                                         cfg.observation_budget);
            }
            traj.steps.push_back(std::move(step));
            return StepSignal::Continue;
        }
        case Decision::Summarizer: {
            // History for the summarizer includes the terminal rationale.
            std::string sum_history =
                history + "Thought: " + assistant_thought(step) + "\n";
            std::string answer;
            try {
                answer = cfg.summarizer->generate(
                    {render_prompt(cfg.summarizer_template,
                                   base_context(q, docs, sum_history)),
                     Role::Summarizer,
                     {}});
            } catch (const BackendError&) {
                result.outcome = Outcome::BackendError;
                return StepSignal::Terminate;
            }
            step.answer = std::move(answer);
            traj.steps.push_back(std::move(step));
            result.outcome = Outcome::Finished;
            result.final_answer = traj.steps.back().answer;
            return StepSignal::Terminate;
        }
        case Decision::GiveUp:
            traj.steps.push_back(std::move(step));
            result.outcome = Outcome::GaveUp;
            return StepSignal::Terminate;
    }
    return StepSignal::Terminate;
}

RunResult run_instruction(const AgentConfig& cfg, const Instruction& q) {
    RunResult result;
    result.trajectory.instruction = q;
    for (;;) {
        if (result.counters.planner_calls >= cfg.max_steps) {
            result.outcome = Outcome::StepLimit;
            break;
        }
        if (execute_step(cfg, q, result) == StepSignal::Terminate) break;
    }
    result.trajectory.outcome = result.outcome;
    return result;
}

std::string format_transcript(const RunResult& result) {
    const Trajectory& t = result.trajectory;
    std::string out = "Instruction [" + t.instruction.id + "]: " +
                      t.instruction.text + "\n\n";
    for (const Step& s : t.steps) {
        out += "--- step " + std::to_string(s.index) + " ---\n";
        out += render_step_block(s);
    }
    out += "\nOutcome: " + outcome_wire(t.outcome) + "\n";
    const RunCounters& c = result.counters;
    out += "Counters: planner_calls=" + std::to_string(c.planner_calls) +
           " caller_calls=" + std::to_string(c.caller_calls) +
           " tool_calls=" + std::to_string(c.tool_calls) +
           " parse_failures=" + std::to_string(c.parse_failures) +
           " hallucinations=" + std::to_string(c.hallucinations) + "\n";
    return out;
}

}  // namespace umi
