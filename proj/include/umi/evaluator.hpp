#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "umi/trajectory.hpp"

namespace umi {

struct StepEvalCase {
    std::string instruction_id;
    int step_index = 0;
    Decision ref_decision = Decision::Caller;
    std::string ref_rationale;
    std::optional<ActionRecord> ref_action;  // caller steps
    std::optional<std::string> ref_answer;   // terminal summarizer steps
    std::string pred_text;                   // raw model output for this step
    std::vector<std::string> tool_set;       // available tool names
    std::string group;                       // empty -> "all"
};

struct MetricReport {
    double plan_acc = 0;  // % over all cases
    double act_em = 0;    // % over caller cases
    double hallu = 0;     // % over caller cases
    double arg_f1 = 0;    // % mean over caller cases
    double rouge_l = 0;   // % mean over answer cases
    int n_plan = 0;
    int n_action = 0;
    int n_answer = 0;
    int n_parse_failures = 0;  // unparseable planner predictions (plan misses)
};

// Token-level LCS F1 after lowercasing + whitespace split; 0 when either
// side is empty or nothing is shared.
double rouge_l(const std::string& candidate, const std::string& reference);

// F1 over flattened dotted-path -> canonical-value pairs; 1.0 when both maps
// are empty. Order-invariant; 1 and 1.0 compare equal.
double arg_f1(const nlohmann::json& pred_args, const nlohmann::json& ref_args);

// Throws std::invalid_argument on an empty case list.
MetricReport evaluate_steps(const std::vector<StepEvalCase>& cases);

struct GroupedReport {
    std::vector<std::pair<std::string, MetricReport>> groups;
    MetricReport overall;  // case-weighted
};

GroupedReport aggregate_report(const std::vector<StepEvalCase>& cases,
                               int jobs = 1);

std::string format_report_table(const GroupedReport& report);
nlohmann::json report_to_json(const GroupedReport& report);

// Builds one case per reference step; pred_text comes from the (id, step)
// keyed map and stays empty when no prediction exists.
std::vector<StepEvalCase> build_cases(
    const std::vector<Trajectory>& references,
    const std::map<std::pair<std::string, int>, std::string>& predictions);

// The prediction text a flawless agent would emit for a reference step
// (the stage-1 assistant-turn rendering).
std::string reference_prediction(const StepEvalCase& c);

}  // namespace umi
