#include "umi/tools.hpp"

#include <cstdio>
#include <fstream>
#include <unistd.h>
#include <mutex>
#include <stdexcept>

#include "umi/parser.hpp"

namespace umi {

namespace {

bool valid_tool_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                  (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

HandlerKind handler_from_string(const std::string& s) {
    if (s == "mock_table") return HandlerKind::MockTable;
    if (s == "scripted_error") return HandlerKind::ScriptedError;
    if (s == "echo") return HandlerKind::Echo;
    if (s == "command") return HandlerKind::Command;
    throw std::runtime_error("unknown handler kind: " + s);
}

// External-command handlers serialize per tool.
std::mutex g_command_mutex;

std::string run_command(const std::string& command, const std::string& input,
                        ToolStatus& status) {
    std::lock_guard<std::mutex> lock(g_command_mutex);
    std::string tmp = "/tmp/umi_tool_input_" + std::to_string(::getpid());
    {
        std::ofstream f(tmp);
        f << input;
    }
    std::string cmd = command + " < " + tmp + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        status = ToolStatus::ToolError;
        return "tool command failed to start";
    }
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = ::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    int rc = ::pclose(pipe);
    std::remove(tmp.c_str());
    if (rc != 0) status = ToolStatus::ToolError;
    if (out.empty()) out = rc == 0 ? "(no output)" : "tool command failed";
    return out;
}

}  // namespace

void ToolRegistry::add(ToolSpec spec) {
    if (!valid_tool_name(spec.name))
        throw std::runtime_error("invalid tool name: \"" + spec.name + "\"");
    if (index_.count(spec.name))
        throw std::runtime_error("duplicate tool name: " + spec.name);
    index_[spec.name] = specs_.size();
    specs_.push_back(std::move(spec));
}

const ToolSpec* ToolRegistry::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &specs_[it->second];
}

ToolRegistry ToolRegistry::from_json(const nlohmann::json& j) {
    ToolRegistry reg;
    for (const auto& jt : j.at("tools")) {
        ToolSpec spec;
        spec.name = jt.at("name").get<std::string>();
        spec.description = jt.value("description", "");
        if (jt.contains("parameters")) {
            for (const auto& [pname, pj] : jt["parameters"].items()) {
                ToolParam p;
                p.type = pj.value("type", "string");
                p.required = pj.value("required", false);
                spec.parameters.emplace_back(pname, p);
            }
        }
        const auto& jh = jt.at("handler");
        spec.handler = handler_from_string(jh.at("kind").get<std::string>());
        switch (spec.handler) {
            case HandlerKind::MockTable:
                for (const auto& je : jh.value("table", nlohmann::json::array()))
                    spec.table.push_back(
                        {je.at("args"), je.at("observation").get<std::string>()});
                if (jh.contains("default"))
                    spec.default_observation = jh["default"].get<std::string>();
                break;
            case HandlerKind::ScriptedError:
                spec.error_text = jh.value("text", "this API has broken");
                break;
            case HandlerKind::Echo:
                break;
            case HandlerKind::Command:
                spec.command = jh.at("command").get<std::string>();
                break;
        }
        reg.add(std::move(spec));
    }
    return reg;
}

ToolRegistry ToolRegistry::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

std::string canonicalize_args(const nlohmann::json& args) {
    // nlohmann objects iterate in sorted key order; dump() is minified.
    return args.dump();
}

ToolResult invoke_tool(const ToolRegistry& reg, const ActionRecord& action) {
    auto start = std::chrono::steady_clock::now();
    ToolResult res;
    const ToolSpec* spec = reg.find(trim(action.name));
    if (!spec) {
        res.status = ToolStatus::ToolError;
        res.observation = "tool not found: " + trim(action.name);
    } else {
        switch (spec->handler) {
            case HandlerKind::MockTable: {
                std::string key = action.args ? canonicalize_args(*action.args)
                                              : action.raw_input;
                const std::string* hit = nullptr;
                for (const auto& entry : spec->table)
                    if (canonicalize_args(entry.args) == key) {
                        hit = &entry.observation;
                        break;
                    }
                if (hit) {
                    res.observation = *hit;
                } else if (spec->default_observation) {
                    res.observation = *spec->default_observation;
                } else {
                    res.status = ToolStatus::ToolError;
                    res.observation =
                        "no canned response for the given arguments";
                }
                break;
            }
            case HandlerKind::ScriptedError:
                res.status = ToolStatus::ToolError;
                res.observation = spec->error_text;
                break;
            case HandlerKind::Echo:
                res.observation = action.args ? canonicalize_args(*action.args)
                                              : action.raw_input;
                if (res.observation.empty()) res.observation = "{}";
                break;
            case HandlerKind::Command:
                res.observation =
                    run_command(spec->command, action.raw_input, res.status);
                break;
        }
    }
    if (res.observation.empty()) res.observation = "(empty observation)";
    res.latency = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    return res;
}

std::string truncate_observation(const std::string& obs, std::size_t budget) {
    if (budget < 4) throw std::invalid_argument("observation budget < 4");
    if (obs.size() <= budget) return obs;
    std::size_t cut = budget - 3;
    // Do not split a UTF-8 code point: back off over continuation bytes.
    while (cut > 0 && (static_cast<unsigned char>(obs[cut]) & 0xC0) == 0x80)
        --cut;
    return obs.substr(0, cut) + "...";
}

}  // namespace umi
