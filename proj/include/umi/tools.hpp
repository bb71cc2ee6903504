#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "umi/trajectory.hpp"

namespace umi {

enum class HandlerKind { MockTable, ScriptedError, Echo, Command };

struct ToolParam {
    std::string type;
    bool required = false;
};

struct MockEntry {
    nlohmann::json args;  // matched on canonicalized form
    std::string observation;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<std::pair<std::string, ToolParam>> parameters;
    HandlerKind handler = HandlerKind::Echo;
    std::vector<MockEntry> table;                 // MockTable
    std::optional<std::string> default_observation;  // MockTable fallback
    std::string error_text;                       // ScriptedError
    std::string command;                          // Command: code on stdin
};

enum class ToolStatus { Ok, ToolError };

struct ToolResult {
    std::string observation;
    ToolStatus status = ToolStatus::Ok;
    std::chrono::microseconds latency{0};
};

class ToolRegistry {
public:
    // Throws std::runtime_error on duplicate or malformed names.
    void add(ToolSpec spec);
    const ToolSpec* find(const std::string& name) const;
    std::size_t size() const { return specs_.size(); }
    const std::vector<ToolSpec>& specs() const { return specs_; }

    static ToolRegistry load_file(const std::string& path);
    static ToolRegistry from_json(const nlohmann::json& j);

private:
    std::vector<ToolSpec> specs_;
    std::map<std::string, std::size_t> index_;
};

// Sorted-key minified rendering; gives order-insensitive table matching.
std::string canonicalize_args(const nlohmann::json& args);

// Total: unknown names and handler failures become ToolError results.
ToolResult invoke_tool(const ToolRegistry& reg, const ActionRecord& action);

// Keeps at most `budget` bytes; over-budget text becomes the first budget-3
// bytes (backed off to a UTF-8 boundary) plus "...". Throws when budget < 4.
std::string truncate_observation(const std::string& obs, std::size_t budget);

}  // namespace umi
