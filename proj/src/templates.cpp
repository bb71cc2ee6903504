#include "umi/templates.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace umi {

namespace {

// Prompt bodies reproduced verbatim, "assess" typo included.
const char* kPlannerTool =
    "You have assess to the following apis:\n"
    "{doc}\n"
    "The conversation history is:\n"
    "{history}\n"
    "You are the assistant to plan what to do next and whether is caller's or "
    "conclusion's turn to answer.\n"
    "Answer with a following format:\n"
    "The thought of the next step, followed by Next: caller or conclusion or "
    "give up.";

const char* kCallerTool =
    "You have assess to the following apis:\n"
    "{doc}\n"
    "The conversation history is:\n"
    "{history}\n"
    "The thought of this step is:\n"
    "{thought}\n"
    "Base on the thought make an api call in the following format:\n"
    "Action: the name of api that should be called in this step, should be "
    "exactly in {tool_names},\n"
    "Action Input: the api call request.";

const char* kSummarizerTool =
    "Make a conclusion based on the conversation history:\n"
    "{history}";

const char* kPlannerMath =
    "Solve the math problem step by step by integrating step-by-step "
    "reasoning and Python code,\n"
    "The problem is: {instruction}\n"
    "The historical execution logs are:\n"
    "{history}\n"
    "You are the assistant to plan what to do next, and shooce caller to "
    "generate code or conclusion to answer the problem.\n"
    "Answer with a following format:\n"
    "The thought of the next step, followed by Next: caller or conclusion.";

const char* kCallerMath =
    "The problem is: {instruction}\n"
    "The historical execution logs are:\n"
    "{history}\n"
    "The thought of this step is:\n"
    "{thought}\n"
    "generate the code for this step";

const char* kSummarizerMath =
    "The problem is: {instruction}\n"
    "The historical execution logs are: \n"
    "{history}\n"
    "Make a conclusion based on the conversation history";

const char* kGlobalTool =
    "You have assess to the following apis:\n"
    "{doc}\n"
    "The conversation history is:\n"
    "{history}\n"
    "Answer with a following format:\n"
    "The thought of the next step, followed by Next: caller or conclusion or "
    "give up. If the next is caller, generate the action and action input. If "
    "the next is conclusion, generate the conclusion.";

const std::optional<std::string>* slot_value(const PromptContext& ctx,
                                             const std::string& name) {
    if (name == "doc") return &ctx.tool_docs;
    if (name == "tool_names") return &ctx.tool_names;
    if (name == "history") return &ctx.history;
    if (name == "thought") return &ctx.thought;
    if (name == "instruction") return &ctx.instruction;
    return nullptr;
}

bool slot_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

}  // namespace

std::string role_name(Role r) {
    switch (r) {
        case Role::Planner: return "planner";
        case Role::Caller: return "caller";
        case Role::Summarizer: return "summarizer";
    }
    return "";
}

std::optional<Role> role_from_string(std::string_view s) {
    if (s == "planner") return Role::Planner;
    if (s == "caller") return Role::Caller;
    if (s == "summarizer") return Role::Summarizer;
    return std::nullopt;
}

RoleTemplate RoleTemplate::builtin(Role role, PromptMode mode) {
    const char* body = nullptr;
    if (mode == PromptMode::ToolUse) {
        switch (role) {
            case Role::Planner: body = kPlannerTool; break;
            case Role::Caller: body = kCallerTool; break;
            case Role::Summarizer: body = kSummarizerTool; break;
        }
    } else {
        switch (role) {
            case Role::Planner: body = kPlannerMath; break;
            case Role::Caller: body = kCallerMath; break;
            case Role::Summarizer: body = kSummarizerMath; break;
        }
    }
    return {role, mode, body};
}

RoleTemplate RoleTemplate::load_file(Role role, PromptMode mode,
                                     const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    // Editors append a trailing newline; the shipped bodies carry none.
    while (!body.empty() && body.back() == '\n') body.pop_back();
    return {role, mode, std::move(body)};
}

const std::string& global_template_body() {
    static const std::string body = kGlobalTool;
    return body;
}

std::string render_prompt(const std::string& body, const PromptContext& ctx) {
    std::string out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && slot_char(body[j])) ++j;
        if (j >= body.size() || body[j] != '}' || j == i + 1) {
            // Not a slot marker; keep the brace literally.
            out.push_back(c);
            ++i;
            continue;
        }
        std::string name = body.substr(i + 1, j - i - 1);
        const auto* value = slot_value(ctx, name);
        if (!value) throw TemplateError("unknown slot {" + name + "}");
        if (!value->has_value())
            throw TemplateError("missing value for slot {" + name + "}");
        out += **value;  // inserted verbatim, never re-expanded
        i = j + 1;
    }
    return out;
}

std::string render_prompt(const RoleTemplate& tmpl, const PromptContext& ctx) {
    return render_prompt(tmpl.body, ctx);
}

ToolDocs format_tool_docs(const std::vector<ToolSpec>& tools) {
    if (tools.empty()) throw std::invalid_argument("empty tool list");
    ToolDocs docs;
    for (std::size_t i = 0; i < tools.size(); ++i) {
        const ToolSpec& t = tools[i];
        if (i > 0) {
            docs.doc += "\n";
            docs.tool_names += ", ";
        }
        docs.doc += t.name + ": ";
        docs.doc += t.description.empty() ? "(no description)" : t.description;
        if (!t.parameters.empty()) {
            docs.doc += "\n  Parameters:";
            for (const auto& [pname, p] : t.parameters) {
                docs.doc += "\n    " + pname + " (" + p.type + ")";
                if (p.required) docs.doc += " [required]";
            }
        }
        docs.tool_names += t.name;
    }
    return docs;
}

}  // namespace umi
