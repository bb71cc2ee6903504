#pragma once

#include <optional>
#include <string>
#include <vector>

#include "umi/tools.hpp"

namespace umi {

enum class Role { Planner, Caller, Summarizer };

std::string role_name(Role r);
std::optional<Role> role_from_string(std::string_view s);

enum class PromptMode { ToolUse, MathCode };

struct RoleTemplate {
    Role role = Role::Planner;
    PromptMode mode = PromptMode::ToolUse;
    std::string body;

    // The prompt bodies shipped with the runtime (the distribution the
    // released checkpoints were trained on, typos included).
    static RoleTemplate builtin(Role role, PromptMode mode);
    // Throws std::runtime_error when the file cannot be read.
    static RoleTemplate load_file(Role role, PromptMode mode,
                                  const std::string& path);
};

// Prompt body for the single-model baseline / stage-1 data (tool mode).
const std::string& global_template_body();

struct PromptContext {
    std::optional<std::string> tool_docs;
    std::optional<std::string> tool_names;
    std::optional<std::string> history;
    std::optional<std::string> thought;
    std::optional<std::string> instruction;
};

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Substitutes {doc} {tool_names} {history} {thought} {instruction} verbatim
// and non-recursively. Throws TemplateError on an unknown slot or a slot the
// context does not supply.
std::string render_prompt(const std::string& body, const PromptContext& ctx);
std::string render_prompt(const RoleTemplate& tmpl, const PromptContext& ctx);

struct ToolDocs {
    std::string doc;         // name, description, parameter schema per tool
    std::string tool_names;  // comma-separated name list
};

// Throws std::invalid_argument on an empty tool list.
ToolDocs format_tool_docs(const std::vector<ToolSpec>& tools);

}  // namespace umi
