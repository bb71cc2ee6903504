#include "umi/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "umi/glpft.hpp"
#include "umi/parser.hpp"

namespace umi {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string canonical_value(const nlohmann::json& v) {
    if (v.is_number()) {
        double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15)
            return std::to_string(static_cast<long long>(d));
        return nlohmann::json(d).dump();
    }
    return v.dump();
}

void flatten(const nlohmann::json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            std::string path = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object())
                flatten(value, path, out);
            else
                out.emplace_back(path, canonical_value(value));
        }
    } else {
        out.emplace_back(prefix, canonical_value(j));
    }
}

// Per-case scoring; aggregation is a pure reduction over these.
struct CaseScore {
    bool plan_hit = false;
    bool parse_failure = false;
    bool is_action = false;
    bool act_hit = false;
    bool hallucinated = false;
    double arg_score = 0;
    bool is_answer = false;
    double rouge_score = 0;
};

std::string extract_answer(const std::string& pred_text) {
    std::size_t pos = pred_text.find("Conclusion:");
    if (pos != std::string::npos) return trim(pred_text.substr(pos + 11));
    // A bare summarizer output carries no markers at all.
    if (!parse_planner_output(pred_text).ok()) return trim(pred_text);
    return "";
}

CaseScore score_case(const StepEvalCase& c) {
    CaseScore score;
    auto planner = parse_planner_output(c.pred_text);
    if (planner.ok()) {
        score.plan_hit = planner.value->decision == c.ref_decision;
    } else {
        score.parse_failure = true;  // counted as a Plan ACC miss
    }

    if (c.ref_decision == Decision::Caller && c.ref_action) {
        score.is_action = true;
        auto action = parse_caller_output(c.pred_text);
        if (!action.ok()) {
            score.hallucinated = true;  // unextractable name
        } else {
            const std::string pred_name = trim(action.value->name);
            const std::string ref_name = trim(c.ref_action->name);
            std::set<std::string> tools(c.tool_set.begin(), c.tool_set.end());
            score.act_hit = pred_name == ref_name;
            score.hallucinated = detect_hallucination(pred_name, tools);
            if (score.act_hit) {
                const auto& pa = action.value->args;
                const auto& ra = c.ref_action->args;
                if (pa && ra)
                    score.arg_score = arg_f1(*pa, *ra);
                else if (!pa && !ra)
                    score.arg_score =
                        action.value->raw_input == c.ref_action->raw_input;
            }
        }
    }

    if (c.ref_decision == Decision::Summarizer && c.ref_answer) {
        score.is_answer = true;
        score.rouge_score = rouge_l(extract_answer(c.pred_text), *c.ref_answer);
    }
    return score;
}

MetricReport reduce(const std::vector<CaseScore>& scores) {
    MetricReport r;
    double plan = 0, act = 0, hallu = 0, arg = 0, rouge = 0;
    for (const CaseScore& s : scores) {
        ++r.n_plan;
        plan += s.plan_hit;
        r.n_parse_failures += s.parse_failure;
        if (s.is_action) {
            ++r.n_action;
            act += s.act_hit;
            hallu += s.hallucinated;
            arg += s.arg_score;
        }
        if (s.is_answer) {
            ++r.n_answer;
            rouge += s.rouge_score;
        }
    }
    if (r.n_plan) r.plan_acc = 100.0 * plan / r.n_plan;
    if (r.n_action) {
        r.act_em = 100.0 * act / r.n_action;
        r.hallu = 100.0 * hallu / r.n_action;
        r.arg_f1 = 100.0 * arg / r.n_action;
    }
    if (r.n_answer) r.rouge_l = 100.0 * rouge / r.n_answer;
    return r;
}

std::vector<CaseScore> score_all(const std::vector<StepEvalCase>& cases,
                                 int jobs) {
    std::vector<CaseScore> scores(cases.size());
    if (jobs <= 1 || cases.size() < 64) {
        for (std::size_t i = 0; i < cases.size(); ++i)
            scores[i] = score_case(cases[i]);
        return scores;
    }
    std::vector<std::thread> workers;
    std::size_t chunk = (cases.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(cases.size(), begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            for (std::size_t i = begin; i < end; ++i)
                scores[i] = score_case(cases[i]);
        });
    }
    for (auto& t : workers) t.join();
    return scores;
}

}  // namespace

double rouge_l(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    const double l = static_cast<double>(lcs_length(cand, ref));
    if (l == 0) return 0.0;
    const double p = l / cand.size();
    const double r = l / ref.size();
    return 2 * p * r / (p + r);
}

double arg_f1(const nlohmann::json& pred_args, const nlohmann::json& ref_args) {
    std::vector<std::pair<std::string, std::string>> pred, ref;
    if (pred_args.is_object()) flatten(pred_args, "", pred);
    if (ref_args.is_object()) flatten(ref_args, "", ref);
    if (pred.empty() && ref.empty()) return 1.0;
    std::sort(pred.begin(), pred.end());
    std::sort(ref.begin(), ref.end());
    std::vector<std::pair<std::string, std::string>> both;
    std::set_intersection(pred.begin(), pred.end(), ref.begin(), ref.end(),
                          std::back_inserter(both));
    const double tp = static_cast<double>(both.size());
    const double fp = static_cast<double>(pred.size()) - tp;
    const double fn = static_cast<double>(ref.size()) - tp;
    if (tp == 0) return 0.0;
    return 2 * tp / (2 * tp + fp + fn);
}

MetricReport evaluate_steps(const std::vector<StepEvalCase>& cases) {
    if (cases.empty()) throw std::invalid_argument("empty case list");
    return reduce(score_all(cases, 1));
}

GroupedReport aggregate_report(const std::vector<StepEvalCase>& cases,
                               int jobs) {
    if (cases.empty()) throw std::invalid_argument("empty case list");
    const std::vector<CaseScore> scores = score_all(cases, jobs);

    std::vector<std::string> order;
    std::map<std::string, std::vector<CaseScore>> by_group;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        std::string g = cases[i].group.empty() ? "all" : cases[i].group;
        if (!by_group.count(g)) order.push_back(g);
        by_group[g].push_back(scores[i]);
    }
    GroupedReport report;
    for (const std::string& g : order)
        report.groups.emplace_back(g, reduce(by_group[g]));
    report.overall = reduce(scores);
    return report;
}

std::string format_report_table(const GroupedReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %9s %9s %9s %9s %9s %7s\n",
                  "Group", "Plan ACC", "Act. EM", "Hallu.", "Arg. F1",
                  "Rouge-L", "Cases");
    out << line;
    auto row = [&](const std::string& name, const MetricReport& m) {
        std::snprintf(line, sizeof line,
                      "%-16s %9.2f %9.2f %9.2f %9.2f %9.2f %7d\n", name.c_str(),
                      m.plan_acc, m.act_em, m.hallu, m.arg_f1, m.rouge_l,
                      m.n_plan);
        out << line;
    };
    for (const auto& [name, m] : report.groups) row(name, m);
    if (report.groups.size() > 1) row("overall", report.overall);
    return out.str();
}

namespace {

nlohmann::json metrics_to_json(const MetricReport& m) {
    return {{"plan_acc", m.plan_acc},
            {"act_em", m.act_em},
            {"hallu", m.hallu},
            {"arg_f1", m.arg_f1},
            {"rouge_l", m.rouge_l},
            {"n_plan", m.n_plan},
            {"n_action", m.n_action},
            {"n_answer", m.n_answer},
            {"n_parse_failures", m.n_parse_failures}};
}

}  // namespace

nlohmann::json report_to_json(const GroupedReport& report) {
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [name, m] : report.groups)
        groups[name] = metrics_to_json(m);
    return {{"groups", groups}, {"overall", metrics_to_json(report.overall)}};
}

std::vector<StepEvalCase> build_cases(
    const std::vector<Trajectory>& references,
    const std::map<std::pair<std::string, int>, std::string>& predictions) {
    std::vector<StepEvalCase> cases;
    for (const Trajectory& t : references) {
        for (const Step& s : t.steps) {
            StepEvalCase c;
            c.instruction_id = t.instruction.id;
            c.step_index = s.index;
            c.ref_decision = s.decision;
            c.ref_rationale = s.rationale;
            c.ref_action = s.action;
            c.ref_answer = s.answer;
            c.tool_set = t.instruction.tool_ids;
            c.group = t.group;
            auto it = predictions.find({t.instruction.id, s.index});
            if (it != predictions.end()) c.pred_text = it->second;
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

std::string reference_prediction(const StepEvalCase& c) {
    Step s;
    s.rationale = c.ref_rationale;
    s.decision = c.ref_decision;
    s.action = c.ref_action;
    s.answer = c.ref_answer;
    return global_target(s);
}

}  // namespace umi
