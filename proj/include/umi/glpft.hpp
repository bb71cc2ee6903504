#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "umi/templates.hpp"
#include "umi/tools.hpp"
#include "umi/trajectory.hpp"

namespace umi {

enum class SampleRole { Global, Planner, Caller, Summarizer };

std::string sample_role_name(SampleRole r);

struct SftSample {
    std::string instruction_id;
    SampleRole role = SampleRole::Global;
    std::string prompt;
    std::string target;
    int step_index = 0;
};

struct DatasetManifest {
    int stage = 1;
    bool reuse = false;
    int global_count = 0;
    int planner_count = 0;
    int caller_count = 0;
    int summarizer_count = 0;
    std::vector<std::string> instruction_ids;  // sorted, unique
    std::string source_digest;                 // over canonical source records

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

struct Stage1Output {
    std::vector<SftSample> samples;
    DatasetManifest manifest;
};

struct Stage2Output {
    std::vector<SftSample> planner;
    std::vector<SftSample> caller;
    std::vector<SftSample> summarizer;
    DatasetManifest manifest;
};

// One global sample per step: prompt is the single-model prompt over the
// history so far, target is the full assistant turn of that step.
// Throws std::invalid_argument on an empty set or an invalid trajectory.
Stage1Output emit_stage1(const std::vector<Trajectory>& trajectories,
                         const ToolRegistry* registry = nullptr);

// Role-sliced samples with role-specific prompts. reuse=true trains stage 2
// on the stage-1 instructions; reuse=false requires a disjoint alternative
// set. Throws std::invalid_argument on misuse (overlapping ids, missing alt).
Stage2Output emit_stage2(const std::vector<Trajectory>& trajectories,
                         bool reuse,
                         const std::vector<Trajectory>* alt = nullptr,
                         const ToolRegistry* registry = nullptr);

struct ReuseCheck {
    bool equal = false;
    std::vector<std::string> only_stage1;
    std::vector<std::string> only_stage2;
};

ReuseCheck verify_instruction_reuse(const DatasetManifest& stage1,
                                    const DatasetManifest& stage2);

// Output record: {"id", "role", "step", "prompt", "target"}.
void write_samples(std::ostream& out, const std::vector<SftSample>& samples);

// Target span builders (shared with the evaluator's reference rendering).
std::string planner_target(const Step& s);
std::string caller_target(const Step& s);
std::string global_target(const Step& s);

}  // namespace umi
