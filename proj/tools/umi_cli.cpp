// umi: run the planner/caller/summarizer agent, reorganize trajectories into
// training datasets, evaluate step-level predictions, and summarize corpora.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "umi/evaluator.hpp"
#include "umi/glpft.hpp"
#include "umi/orchestrator.hpp"

namespace fs = std::filesystem;

namespace {

// Write to a temp sibling and rename, so failures never leave partial output.
void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

umi::BackendConfig backend_config_from_json(const nlohmann::json& j) {
    umi::BackendConfig cfg;
    const std::string kind = j.value("kind", "scripted");
    cfg.kind = kind == "http" ? umi::BackendConfig::Kind::Http
                              : umi::BackendConfig::Kind::Scripted;
    cfg.endpoint = j.value("endpoint", "");
    cfg.model_name = j.value("model", "");
    cfg.timeout_ms = j.value("timeout_ms", 30000);
    cfg.max_new_tokens = j.value("max_new_tokens", 512);
    cfg.temperature = j.value("temperature", 0.0);
    cfg.max_retries = j.value("max_retries", 2);
    cfg.script_path = j.value("script", "");
    if (const char* env = std::getenv("UMI_ENDPOINT");
        env && cfg.kind == umi::BackendConfig::Kind::Http)
        cfg.endpoint = env;
    return cfg;
}

umi::AgentConfig agent_config_from_json(const nlohmann::json& j) {
    umi::AgentConfig cfg;
    const auto mode = j.value("mode", "tool") == "math"
                          ? umi::PromptMode::MathCode
                          : umi::PromptMode::ToolUse;
    cfg.planner_template = umi::RoleTemplate::builtin(umi::Role::Planner, mode);
    cfg.caller_template = umi::RoleTemplate::builtin(umi::Role::Caller, mode);
    cfg.summarizer_template =
        umi::RoleTemplate::builtin(umi::Role::Summarizer, mode);
    if (j.contains("templates")) {
        const auto& jt = j["templates"];
        if (jt.contains("planner"))
            cfg.planner_template = umi::RoleTemplate::load_file(
                umi::Role::Planner, mode, jt["planner"].get<std::string>());
        if (jt.contains("caller"))
            cfg.caller_template = umi::RoleTemplate::load_file(
                umi::Role::Caller, mode, jt["caller"].get<std::string>());
        if (jt.contains("summarizer"))
            cfg.summarizer_template = umi::RoleTemplate::load_file(
                umi::Role::Summarizer, mode,
                jt["summarizer"].get<std::string>());
    }
    cfg.registry = std::make_shared<umi::ToolRegistry>(
        umi::ToolRegistry::load_file(j.at("tools").get<std::string>()));
    cfg.max_steps = j.value("max_steps", 12);
    cfg.observation_budget = j.value("observation_budget", 1024);
    cfg.prompt_budget = j.value("prompt_budget", 24000);

    const auto& jb = j.at("backends");
    // Scripted backends sharing one script file share one response queue.
    std::map<std::string, std::shared_ptr<umi::Backend>> scripted;
    auto build = [&](const char* role) -> std::shared_ptr<umi::Backend> {
        umi::BackendConfig bc = backend_config_from_json(jb.at(role));
        if (bc.kind == umi::BackendConfig::Kind::Scripted) {
            auto it = scripted.find(bc.script_path);
            if (it != scripted.end()) return it->second;
            auto backend = umi::make_backend(bc);
            scripted[bc.script_path] = backend;
            return backend;
        }
        return umi::make_backend(bc);
    };
    cfg.planner = build("planner");
    cfg.caller = build("caller");
    cfg.summarizer = build("summarizer");
    return cfg;
}

std::vector<umi::Instruction> load_instructions(const std::string& path) {
    nlohmann::json j = load_json(path);
    std::vector<umi::Instruction> out;
    auto one = [](const nlohmann::json& ji) {
        umi::Instruction q;
        q.id = ji.value("id", "instruction-0");
        q.text = ji.at("text").get<std::string>();
        q.tool_ids = ji.value("tools", std::vector<std::string>{});
        return q;
    };
    if (j.is_array())
        for (const auto& ji : j) out.push_back(one(ji));
    else
        out.push_back(one(j));
    return out;
}

int cmd_run(const std::string& config_path, const std::string& instruction_path,
            const std::string& out_path, const std::string& transcript_path) {
    umi::AgentConfig cfg = agent_config_from_json(load_json(config_path));
    std::ostringstream jsonl, transcript;
    for (const umi::Instruction& q : load_instructions(instruction_path)) {
        umi::RunResult result = umi::run_instruction(cfg, q);
        jsonl << umi::trajectory_to_json(result.trajectory).dump() << "\n";
        transcript << umi::format_transcript(result) << "\n";
    }
    atomic_write(out_path, jsonl.str());
    if (!transcript_path.empty())
        atomic_write(transcript_path, transcript.str());
    else
        std::cout << transcript.str();
    return 0;
}

std::vector<umi::Trajectory> load_valid_trajectories(const std::string& path) {
    umi::ReadReport report = umi::read_trajectories_file(path);
    for (const auto& [line, msg] : report.errors)
        std::cerr << path << ":" << line << ": " << msg << "\n";
    return std::move(report.trajectories);
}

int cmd_reorganize(const std::string& in_path, const std::string& out_dir,
                   int stage, bool reuse, const std::string& alt_path,
                   const std::string& tools_path,
                   const std::string& verify_manifest_path) {
    std::vector<umi::Trajectory> trajectories =
        load_valid_trajectories(in_path);
    std::shared_ptr<umi::ToolRegistry> registry;
    if (!tools_path.empty())
        registry = std::make_shared<umi::ToolRegistry>(
            umi::ToolRegistry::load_file(tools_path));
    fs::create_directories(out_dir);

    auto dump_samples = [&](const std::string& name,
                            const std::vector<umi::SftSample>& samples) {
        std::ostringstream out;
        umi::write_samples(out, samples);
        atomic_write(fs::path(out_dir) / (name + ".jsonl"), out.str());
    };

    umi::DatasetManifest manifest;
    if (stage == 1) {
        umi::Stage1Output out = umi::emit_stage1(trajectories, registry.get());
        dump_samples("global", out.samples);
        manifest = out.manifest;
        atomic_write(fs::path(out_dir) / "manifest_stage1.json",
                     manifest.to_json().dump(2) + "\n");
    } else {
        std::vector<umi::Trajectory> alt;
        if (!alt_path.empty()) alt = load_valid_trajectories(alt_path);
        umi::Stage2Output out =
            umi::emit_stage2(trajectories, reuse,
                             alt_path.empty() ? nullptr : &alt, registry.get());
        dump_samples("planner", out.planner);
        dump_samples("caller", out.caller);
        dump_samples("summarizer", out.summarizer);
        manifest = out.manifest;
        atomic_write(fs::path(out_dir) / "manifest_stage2.json",
                     manifest.to_json().dump(2) + "\n");
    }

    if (!verify_manifest_path.empty()) {
        umi::DatasetManifest other =
            umi::DatasetManifest::from_json(load_json(verify_manifest_path));
        umi::ReuseCheck check = umi::verify_instruction_reuse(other, manifest);
        if (!check.equal) {
            std::cerr << "instruction sets differ: " << check.only_stage1.size()
                      << " only in " << verify_manifest_path << ", "
                      << check.only_stage2.size() << " only in this output\n";
            for (const auto& id : check.only_stage1)
                std::cerr << "  - " << id << "\n";
            for (const auto& id : check.only_stage2)
                std::cerr << "  + " << id << "\n";
            return 1;
        }
        std::cout << "instruction reuse verified (" <<
            manifest.instruction_ids.size() << " ids)\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& ref_path, const std::string& pred_path,
                 const std::string& out_path, int jobs) {
    std::vector<umi::Trajectory> refs = load_valid_trajectories(ref_path);
    std::ifstream in(pred_path);
    if (!in) throw std::runtime_error("cannot open " + pred_path);
    std::map<std::pair<std::string, int>, std::string> preds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            std::cerr << pred_path << ":" << lineno << ": malformed record\n";
            continue;
        }
        preds[{j.at("id").get<std::string>(), j.at("step").get<int>()}] =
            j.at("pred").get<std::string>();
    }
    std::vector<umi::StepEvalCase> cases = umi::build_cases(refs, preds);
    if (cases.empty()) throw std::runtime_error("no evaluation cases");
    umi::GroupedReport report = umi::aggregate_report(cases, jobs);
    std::cout << umi::format_report_table(report);
    if (!out_path.empty())
        atomic_write(out_path, umi::report_to_json(report).dump(2) + "\n");
    return 0;
}

int cmd_stats(const std::string& in_path) {
    umi::ReadReport report = umi::read_trajectories_file(in_path);
    std::size_t total_steps = 0;
    std::map<std::string, int> outcomes;
    for (const umi::Trajectory& t : report.trajectories) {
        total_steps += t.n();
        ++outcomes[umi::outcome_wire(t.outcome)];
    }
    const std::size_t n = report.trajectories.size();
    std::printf("records:        %zu\n", n);
    std::printf("malformed:      %zu\n", report.errors.size());
    std::printf("mean steps:     %.2f\n",
                n ? static_cast<double>(total_steps) / n : 0.0);
    for (const auto& [name, count] : outcomes)
        std::printf("outcome %-14s %d\n", (name + ":").c_str(), count);
    for (const auto& [line, msg] : report.errors)
        std::fprintf(stderr, "%s:%d: %s\n", in_path.c_str(), line, msg.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-role agent runtime, data pipeline, and evaluator"};
    app.require_subcommand(1);

    std::string config_path, instruction_path, out_path, transcript_path;
    auto* run = app.add_subcommand("run", "Execute instructions with the agent");
    run->add_option("--config", config_path, "Run config (JSON)")->required();
    run->add_option("--instruction-file", instruction_path,
                    "Instruction JSON (object or array)")->required();
    run->add_option("--out", out_path, "Trajectory JSONL output")->required();
    run->add_option("--transcript", transcript_path,
                    "Transcript log output (default: stdout)");

    std::string in_path, out_dir, alt_path, tools_path, verify_path;
    int stage = 2;
    bool reuse = false;
    auto* reorganize = app.add_subcommand(
        "reorganize", "Emit stage-1/stage-2 training datasets");
    reorganize->add_option("--stage", stage, "1 or 2")
        ->check(CLI::Range(1, 2))->required();
    reorganize->add_option("--in", in_path, "Trajectory JSONL")->required();
    reorganize->add_option("--out-dir", out_dir, "Output directory")
        ->required();
    reorganize->add_flag("--reuse", reuse,
                         "Stage 2 reuses the stage-1 instructions");
    reorganize->add_option("--alt", alt_path,
                           "Alternative trajectory set (stage 2, w/o reuse)");
    reorganize->add_option("--tools", tools_path, "Tool definition file");
    reorganize->add_option("--verify-reuse", verify_path,
                           "Manifest to check instruction reuse against");

    std::string ref_path, pred_path, report_path;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    auto* evaluate =
        app.add_subcommand("evaluate", "Score step-level predictions");
    evaluate->add_option("--ref", ref_path, "Reference trajectory JSONL")
        ->required();
    evaluate->add_option("--pred", pred_path, "Prediction JSONL")->required();
    evaluate->add_option("--out", report_path, "Report JSON output");
    evaluate->add_option("--jobs", jobs, "Worker count");

    std::string stats_path;
    auto* stats = app.add_subcommand("stats", "Summarize a trajectory corpus");
    stats->add_option("--in", stats_path, "Trajectory JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return cmd_run(config_path, instruction_path, out_path,
                           transcript_path);
        if (reorganize->parsed())
            return cmd_reorganize(in_path, out_dir, stage, reuse, alt_path,
                                  tools_path, verify_path);
        if (evaluate->parsed())
            return cmd_evaluate(ref_path, pred_path, report_path, jobs);
        if (stats->parsed()) return cmd_stats(stats_path);
    } catch (const std::exception& e) {
        std::cerr << "umi: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
