#include "umi/glpft.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

namespace umi {

namespace {

// FNV-1a over the canonical JSONL serialization of the source set.
std::string digest_trajectories(const std::vector<Trajectory>& ts) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= '\n';
        h *= 1099511628211ULL;
    };
    for (const Trajectory& t : ts) mix(trajectory_to_json(t).dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> instruction_id_set(const std::vector<Trajectory>& ts) {
    std::set<std::string> ids;
    for (const Trajectory& t : ts) ids.insert(t.instruction.id);
    return {ids.begin(), ids.end()};
}

ToolDocs docs_for(const Trajectory& t, const ToolRegistry* registry) {
    if (t.instruction.tool_ids.empty()) return {"(no apis available)", ""};
    std::vector<ToolSpec> specs;
    for (const std::string& id : t.instruction.tool_ids) {
        const ToolSpec* spec = registry ? registry->find(id) : nullptr;
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

std::string history_for(const Trajectory& t, std::size_t upto) {
    return t.instruction.text + "\n" + render_history(t, upto);
}

PromptContext context_for(const Trajectory& t, const ToolDocs& docs,
                          std::string history) {
    PromptContext ctx;
    ctx.tool_docs = docs.doc;
    ctx.tool_names = docs.tool_names;
    ctx.instruction = t.instruction.text;
    ctx.history = std::move(history);
    return ctx;
}

void require_valid(const Trajectory& t) {
    ValidationResult v = validate_trajectory(t);
    if (!v.ok())
        throw std::invalid_argument("invalid trajectory " + t.instruction.id +
                                    ": " + v.violations.front().rule);
}

// Order-stable output: sort by instruction id, then step index.
void sort_samples(std::vector<SftSample>& samples) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const SftSample& a, const SftSample& b) {
                         if (a.instruction_id != b.instruction_id)
                             return a.instruction_id < b.instruction_id;
                         return a.step_index < b.step_index;
                     });
}

}  // namespace

std::string sample_role_name(SampleRole r) {
    switch (r) {
        case SampleRole::Global: return "global";
        case SampleRole::Planner: return "planner";
        case SampleRole::Caller: return "caller";
        case SampleRole::Summarizer: return "summarizer";
    }
    return "";
}

std::string planner_target(const Step& s) { return assistant_thought(s); }

std::string caller_target(const Step& s) {
    return "Action: " + s.action->name + "\nAction Input: " +
           s.action->raw_input;
}

std::string global_target(const Step& s) {
    std::string target = planner_target(s);
    if (s.decision == Decision::Caller && s.action)
        target += "\n" + caller_target(s);
    else if (s.decision == Decision::Summarizer && s.answer)
        target += "\nConclusion: " + *s.answer;
    return target;
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json counts;
    if (stage == 1) {
        counts["global"] = global_count;
    } else {
        counts["planner"] = planner_count;
        counts["caller"] = caller_count;
        counts["summarizer"] = summarizer_count;
    }
    // Published training hyperparameters, carried as advisory metadata for
    // external trainers; nothing here executes training.
    nlohmann::json hparams;
    if (stage == 1) {
        hparams = {{"learning_rate", 5e-5}, {"epochs", 2}, {"batch_size", 48}};
    } else {
        hparams = {
            {"learning_rate", 1e-5},
            {"batch_size", 48},
            {"epochs", {{"planner", 1}, {"caller", 1}, {"summarizer", 2}}}};
    }
    return {{"stage", stage},
            {"reuse", reuse},
            {"counts", counts},
            {"instruction_ids", instruction_ids},
            {"source_digest", source_digest},
            {"recommended_hparams", hparams}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.stage = j.at("stage").get<int>();
    m.reuse = j.value("reuse", false);
    const auto& counts = j.at("counts");
    m.global_count = counts.value("global", 0);
    m.planner_count = counts.value("planner", 0);
    m.caller_count = counts.value("caller", 0);
    m.summarizer_count = counts.value("summarizer", 0);
    m.instruction_ids =
        j.at("instruction_ids").get<std::vector<std::string>>();
    m.source_digest = j.value("source_digest", "");
    return m;
}

Stage1Output emit_stage1(const std::vector<Trajectory>& trajectories,
                         const ToolRegistry* registry) {
    if (trajectories.empty())
        throw std::invalid_argument("no trajectories to reorganize");
    Stage1Output out;
    for (const Trajectory& t : trajectories) {
        require_valid(t);
        const ToolDocs docs = docs_for(t, registry);
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            SftSample s;
            s.instruction_id = t.instruction.id;
            s.role = SampleRole::Global;
            s.step_index = static_cast<int>(i);
            s.prompt = render_prompt(global_template_body(),
                                     context_for(t, docs, history_for(t, i)));
            s.target = global_target(t.steps[i]);
            out.samples.push_back(std::move(s));
        }
    }
    sort_samples(out.samples);
    out.manifest.stage = 1;
    out.manifest.global_count = static_cast<int>(out.samples.size());
    out.manifest.instruction_ids = instruction_id_set(trajectories);
    out.manifest.source_digest = digest_trajectories(trajectories);
    return out;
}

Stage2Output emit_stage2(const std::vector<Trajectory>& trajectories,
                         bool reuse, const std::vector<Trajectory>* alt,
                         const ToolRegistry* registry) {
    if (trajectories.empty())
        throw std::invalid_argument("no trajectories to reorganize");
    if (reuse && alt)
        throw std::invalid_argument("reuse=true takes no alternative set");
    if (!reuse && !alt)
        throw std::invalid_argument("reuse=false requires an alternative set");
    if (!reuse) {
        std::set<std::string> base;
        for (const Trajectory& t : trajectories) base.insert(t.instruction.id);
        for (const Trajectory& t : *alt)
            if (base.count(t.instruction.id))
                throw std::invalid_argument(
                    "alternative set overlaps stage-1 instruction id: " +
                    t.instruction.id);
    }
    const std::vector<Trajectory>& source = reuse ? trajectories : *alt;

    const RoleTemplate planner_tmpl =
        RoleTemplate::builtin(Role::Planner, PromptMode::ToolUse);
    const RoleTemplate caller_tmpl =
        RoleTemplate::builtin(Role::Caller, PromptMode::ToolUse);
    const RoleTemplate summarizer_tmpl =
        RoleTemplate::builtin(Role::Summarizer, PromptMode::ToolUse);

    Stage2Output out;
    for (const Trajectory& t : source) {
        require_valid(t);
        const ToolDocs docs = docs_for(t, registry);
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            const Step& step = t.steps[i];
            const std::string history = history_for(t, i);
            {
                SftSample s;
                s.instruction_id = t.instruction.id;
                s.role = SampleRole::Planner;
                s.step_index = static_cast<int>(i);
                s.prompt = render_prompt(planner_tmpl,
                                         context_for(t, docs, history));
                s.target = planner_target(step);
                out.planner.push_back(std::move(s));
            }
            if (step.decision == Decision::Caller && step.action) {
                SftSample s;
                s.instruction_id = t.instruction.id;
                s.role = SampleRole::Caller;
                s.step_index = static_cast<int>(i);
                PromptContext ctx = context_for(t, docs, history);
                ctx.thought = step.rationale;  // verbatim rationale
                s.prompt = render_prompt(caller_tmpl, ctx);
                s.target = caller_target(step);
                out.caller.push_back(std::move(s));
            }
            if (step.decision == Decision::Summarizer && step.answer) {
                SftSample s;
                s.instruction_id = t.instruction.id;
                s.role = SampleRole::Summarizer;
                s.step_index = static_cast<int>(i);
                std::string sum_history =
                    history + "Thought: " + assistant_thought(step) + "\n";
                s.prompt = render_prompt(
                    summarizer_tmpl, context_for(t, docs, sum_history));
                s.target = *step.answer;
                out.summarizer.push_back(std::move(s));
            }
        }
    }
    sort_samples(out.planner);
    sort_samples(out.caller);
    sort_samples(out.summarizer);
    out.manifest.stage = 2;
    out.manifest.reuse = reuse;
    out.manifest.planner_count = static_cast<int>(out.planner.size());
    out.manifest.caller_count = static_cast<int>(out.caller.size());
    out.manifest.summarizer_count = static_cast<int>(out.summarizer.size());
    out.manifest.instruction_ids = instruction_id_set(source);
    out.manifest.source_digest = digest_trajectories(source);
    return out;
}

ReuseCheck verify_instruction_reuse(const DatasetManifest& stage1,
                                    const DatasetManifest& stage2) {
    ReuseCheck check;
    std::set<std::string> a(stage1.instruction_ids.begin(),
                            stage1.instruction_ids.end());
    std::set<std::string> b(stage2.instruction_ids.begin(),
                            stage2.instruction_ids.end());
    for (const std::string& id : a)
        if (!b.count(id)) check.only_stage1.push_back(id);
    for (const std::string& id : b)
        if (!a.count(id)) check.only_stage2.push_back(id);
    check.equal = check.only_stage1.empty() && check.only_stage2.empty();
    return check;
}

void write_samples(std::ostream& out, const std::vector<SftSample>& samples) {
    for (const SftSample& s : samples) {
        nlohmann::json j = {{"id", s.instruction_id},
                            {"role", sample_role_name(s.role)},
                            {"step", s.step_index},
                            {"prompt", s.prompt},
                            {"target", s.target}};
        out << j.dump() << "\n";
    }
}

}  // namespace umi
