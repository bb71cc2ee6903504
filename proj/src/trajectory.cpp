#include "umi/trajectory.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace umi {

std::string decision_token(Decision d) {
    switch (d) {
        case Decision::Caller: return "caller";
        case Decision::Summarizer: return "conclusion";
        case Decision::GiveUp: return "give up";
    }
    return "";
}

std::string decision_wire(Decision d) {
    switch (d) {
        case Decision::Caller: return "caller";
        case Decision::Summarizer: return "summarizer";
        case Decision::GiveUp: return "give_up";
    }
    return "";
}

std::optional<Decision> decision_from_wire(std::string_view s) {
    if (s == "caller") return Decision::Caller;
    if (s == "summarizer") return Decision::Summarizer;
    if (s == "give_up") return Decision::GiveUp;
    return std::nullopt;
}

std::string outcome_wire(Outcome o) {
    switch (o) {
        case Outcome::Finished: return "finished";
        case Outcome::GaveUp: return "gave_up";
        case Outcome::StepLimit: return "step_limit";
        case Outcome::BackendError: return "backend_error";
        case Outcome::ParseError: return "parse_error";
    }
    return "";
}

std::optional<Outcome> outcome_from_wire(std::string_view s) {
    if (s == "finished") return Outcome::Finished;
    if (s == "gave_up") return Outcome::GaveUp;
    if (s == "step_limit") return Outcome::StepLimit;
    if (s == "backend_error") return Outcome::BackendError;
    if (s == "parse_error") return Outcome::ParseError;
    return std::nullopt;
}

ValidationResult validate_trajectory(const Trajectory& t) {
    ValidationResult res;
    auto flag = [&](int idx, std::string rule) {
        res.violations.push_back({idx, std::move(rule)});
    };

    if (t.instruction.text.empty()) flag(-1, "empty instruction text");
    {
        std::set<std::string> seen;
        for (const auto& id : t.instruction.tool_ids)
            if (!seen.insert(id).second) flag(-1, "duplicate tool id: " + id);
    }

    const int n = static_cast<int>(t.steps.size());
    for (int i = 0; i < n; ++i) {
        const Step& s = t.steps[i];
        const bool last = (i == n - 1);
        if (s.index != i) flag(i, "non-contiguous step index");
        switch (s.decision) {
            case Decision::Caller:
                if (!s.action) flag(i, "missing action");
                if (s.answer) flag(i, "answer on caller step");
                break;
            case Decision::Summarizer:
                if (!last) flag(i, "terminal step not last");
                if (!s.answer) flag(i, "missing answer on terminal step");
                if (s.observation) flag(i, "observation on terminal step");
                break;
            case Decision::GiveUp:
                if (!last) flag(i, "terminal step not last");
                if (s.action) flag(i, "action on give-up step");
                if (s.observation) flag(i, "observation on give-up step");
                if (s.answer) flag(i, "answer on give-up step");
                break;
        }
        if (s.observation && !s.action) flag(i, "observation without action");
    }

    const bool last_is_summarizer =
        n > 0 && t.steps.back().decision == Decision::Summarizer;
    if ((t.outcome == Outcome::Finished) != last_is_summarizer)
        flag(-1, "outcome does not match terminal step");
    return res;
}

std::string assistant_thought(const Step& s) {
    std::string out;
    if (!s.rationale.empty()) {
        out = s.rationale;
        out += ' ';
    }
    out += "Next: ";
    out += decision_token(s.decision);
    return out;
}

std::string render_step_block(const Step& s) {
    std::string out = "Thought: " + assistant_thought(s) + "\n";
    if (s.action) {
        out += "Action: " + s.action->name + "\n";
        out += "Action Input: " + s.action->raw_input + "\n";
    }
    if (s.observation) out += "Observation: " + *s.observation + "\n";
    if (s.decision == Decision::Summarizer && s.answer)
        out += "Conclusion: " + *s.answer + "\n";
    return out;
}

std::string render_history(const Trajectory& t, std::size_t upto) {
    if (upto > t.steps.size())
        throw std::out_of_range("render_history: upto out of range");
    std::string out;
    for (std::size_t i = 0; i < upto; ++i) out += render_step_block(t.steps[i]);
    return out;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const Step& s : t.steps) {
        nlohmann::json js;
        js["rationale"] = s.rationale;
        js["decision"] = decision_wire(s.decision);
        if (s.action) {
            js["action"] = {{"name", s.action->name},
                            {"raw_input", s.action->raw_input}};
        } else {
            js["action"] = nullptr;
        }
        js["observation"] = s.observation ? nlohmann::json(*s.observation)
                                          : nlohmann::json(nullptr);
        js["answer"] =
            s.answer ? nlohmann::json(*s.answer) : nlohmann::json(nullptr);
        steps.push_back(std::move(js));
    }
    nlohmann::json j;
    j["id"] = t.instruction.id;
    j["instruction"] = t.instruction.text;
    j["tools"] = t.instruction.tool_ids;
    j["steps"] = std::move(steps);
    j["outcome"] = outcome_wire(t.outcome);
    if (!t.group.empty()) j["group"] = t.group;
    return j;
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::runtime_error(std::string("missing field \"") + key + "\"");
    return *it;
}

}  // namespace

Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.instruction.id = require(j, "id").get<std::string>();
    t.instruction.text = require(j, "instruction").get<std::string>();
    t.instruction.tool_ids =
        require(j, "tools").get<std::vector<std::string>>();
    int idx = 0;
    for (const auto& js : require(j, "steps")) {
        Step s;
        s.index = idx++;
        s.rationale = require(js, "rationale").get<std::string>();
        auto d = decision_from_wire(require(js, "decision").get<std::string>());
        if (!d) throw std::runtime_error("unknown decision");
        s.decision = *d;
        const auto& ja = require(js, "action");
        if (!ja.is_null()) {
            ActionRecord a;
            a.name = require(ja, "name").get<std::string>();
            a.raw_input = require(ja, "raw_input").get<std::string>();
            s.action = std::move(a);
        }
        if (js.contains("observation") && !js["observation"].is_null())
            s.observation = js["observation"].get<std::string>();
        if (js.contains("answer") && !js["answer"].is_null())
            s.answer = js["answer"].get<std::string>();
        t.steps.push_back(std::move(s));
    }
    auto o = outcome_from_wire(require(j, "outcome").get<std::string>());
    if (!o) throw std::runtime_error("unknown outcome");
    t.outcome = *o;
    if (j.contains("group") && j["group"].is_string())
        t.group = j["group"].get<std::string>();
    return t;
}

ReadReport read_trajectories(std::istream& in) {
    ReadReport report;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            report.trajectories.push_back(
                trajectory_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            report.errors.emplace_back(lineno, e.what());
        }
    }
    return report;
}

ReadReport read_trajectories_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_trajectories(in);
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& ts) {
    for (const Trajectory& t : ts) out << trajectory_to_json(t).dump() << "\n";
}

}  // namespace umi
