// Acceptance checks for the runtime, data pipeline, and evaluator: one
// PASS/FAIL line per criterion, nonzero exit when any criterion fails.
// Everything here runs offline against scripted backends and mock tools.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "umi/evaluator.hpp"
#include "umi/glpft.hpp"
#include "umi/orchestrator.hpp"
#include "umi/parser.hpp"

using namespace umi;

namespace {

int g_failures = 0;

void criterion(const std::string& name, double budget_s,
               const std::function<void(std::vector<std::string>&)>& body) {
    std::vector<std::string> problems;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(problems);
    } catch (const std::exception& e) {
        problems.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > budget_s)
        problems.push_back("exceeded time budget of " +
                           std::to_string(budget_s) + " s");
    if (problems.empty()) {
        std::printf("[PASS] %s (%.2f s)\n", name.c_str(), elapsed);
    } else {
        ++g_failures;
        std::printf("[FAIL] %s (%.2f s)\n", name.c_str(), elapsed);
        for (const std::string& p : problems)
            std::printf("       - %s\n", p.c_str());
    }
}

void expect(std::vector<std::string>& problems, bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
}

// ---------------------------------------------------------------------------
// Criterion 1 fixtures: five execution-log excerpts, checked for exact
// rationale / decision / action-name / argument extraction.

void check_parser_fidelity(std::vector<std::string>& problems) {
    // 1. Product-catalog planner turn + caller turn with a quote-wrapped
    //    argument object.
    {
        auto plan = parse_planner_output(
            "Based on the user's request to explore the catalog of products "
            "in the 'Electronics' category, I need to call the "
            "'get_products_in_category_for_demo_project_v13' function with "
            "the arguments 'limit': 10, 'skip': 0, and 'category': "
            "'Electronics'. This will allow me to retrieve the list of "
            "products along with their details specifically from the "
            "'Electronics' category. By calling this function, I can fulfill "
            "the user's request and provide them with the desired "
            "information. Next: caller.");
        expect(problems, plan.ok() && plan.value->decision == Decision::Caller,
               "catalog planner turn: decision != caller");
        expect(problems,
               plan.ok() && plan.value->rationale.size() > 100 &&
                   plan.value->rationale.back() == '.',
               "catalog planner turn: rationale not extracted verbatim");

        auto act = parse_caller_output(
            "Action: get_products_in_category_for_demo_project_v13\n"
            "Action Input: \"{  \"limit\": 10, \"skip\": 0,  \"category\": "
            "\"Electronics\"}\"");
        expect(problems,
               act.ok() && act.value->name ==
                               "get_products_in_category_for_demo_project_v13",
               "catalog caller turn: wrong action name");
        expect(problems,
               act.ok() && act.value->args &&
                   (*act.value->args)["limit"] == 10 &&
                   (*act.value->args)["skip"] == 0 &&
                   (*act.value->args)["category"] == "Electronics",
               "catalog caller turn: wrong arguments");
    }

    // 2. Dive-site caller turns: quote-wrapped multi-line object and the
    //    quote-wrapped empty object.
    {
        auto act = parse_caller_output(
            "Action: "
            "esites_by_a_country_or_a_region_for_world_scuba_diving_sites_"
            "api\n"
            "Action Input: \"{\n  \"country\": \"Thailand\"\n}\"");
        expect(problems,
               act.ok() &&
                   act.value->name ==
                       "esites_by_a_country_or_a_region_for_world_scuba_"
                       "diving_sites_api",
               "dive-site caller turn: wrong action name");
        expect(problems,
               act.ok() && act.value->args &&
                   (*act.value->args)["country"] == "Thailand",
               "dive-site caller turn: wrong arguments");

        auto stays = parse_caller_output(
            "Action: get_top_tier_stays_filter_for_airbnb_v2\n"
            "Action Input: \"{}\"");
        expect(problems,
               stays.ok() && stays.value->args && stays.value->args->empty(),
               "stays caller turn: empty object not recovered");
    }

    // 3. Single-model turn with no space after "Action:" and a rationale
    //    preceding the action block.
    {
        auto act = parse_caller_output(
            "Based on the previous action, it seems that the API call to get "
            "dive sites in Thailand was not successful. To generate a "
            "different action, I will try using the "
            "\"ranked_world_crime_cities_for_ranked_crime_cities\" function "
            "to get a list of ranked crime cities.\n\n"
            "Action:ranked_world_crime_cities_for_ranked_crime_cities\n\n"
            "Action Input: {}");
        expect(problems,
               act.ok() && act.value->name ==
                               "ranked_world_crime_cities_for_ranked_crime_"
                               "cities",
               "crime-cities turn: name after bare colon not extracted");
        auto filt = parse_caller_output(
            "Action: get_city_by_filter_for_ranked_crime_cities\n"
            "Action Input: {\"id\":1}");
        expect(problems,
               filt.ok() && filt.value->args && (*filt.value->args)["id"] == 1,
               "city-filter turn: wrong arguments");
    }

    // 4. Address-verification planner turns for all three phases.
    {
        auto first = parse_planner_output(
            "I need to verify the address and then standardize it. \n\nNext: "
            "caller.");
        expect(problems,
               first.ok() &&
                   first.value->rationale ==
                       "I need to verify the address and then standardize "
                       "it." &&
                   first.value->decision == Decision::Caller,
               "address planner turn 1: wrong rationale or decision");
        auto second = parse_planner_output(
            "The address is valid and has been successfully standardized. "
            "\n\nNext: conclusion.");
        expect(problems,
               second.ok() && second.value->decision == Decision::Summarizer,
               "address planner turn 2: decision != conclusion");
        auto act = parse_caller_output(
            "Action: verifyUSAddress\n"
            "Action Input: {\"addressLine1\": \"321 Maple Dr\", "
            "\"addressLine2\":\"Apt 12C\", \"city\": \"Houston\", \"state\": "
            "\"TX\", \"zipCode\": \"77002\"}");
        expect(problems,
               act.ok() && act.value->name == "verifyUSAddress" &&
                   act.value->args &&
                   (*act.value->args)["addressLine1"] == "321 Maple Dr" &&
                   (*act.value->args)["zipCode"] == "77002",
               "address caller turn: wrong name or arguments");
    }

    // 5. Math-mode planner turns: an empty rationale and a bare conclusion.
    {
        auto bare = parse_planner_output("Next: caller.");
        expect(problems,
               bare.ok() && bare.value->rationale.empty() &&
                   bare.value->decision == Decision::Caller,
               "math planner turn: empty rationale not accepted");
        auto conclude = parse_planner_output("Next: conclusion.");
        expect(problems,
               conclude.ok() &&
                   conclude.value->decision == Decision::Summarizer,
               "math planner turn: bare conclusion not accepted");
        auto fix = parse_planner_output(
            "The code provided for the solution to the given problem will "
            "result in an error. To fix this error, the `sqrt` function "
            "needs to be imported from the `sympy` library. \n\n\nNext: "
            "caller.");
        expect(problems, fix.ok() && fix.value->decision == Decision::Caller,
               "math planner turn: retry rationale not parsed");
    }
}

// ---------------------------------------------------------------------------
// Oracles (independent, deliberately naive implementations).

std::size_t lcs_oracle(const std::vector<std::string>& a,
                       const std::vector<std::string>& b, std::size_t i = 0,
                       std::size_t j = 0) {
    if (i == a.size() || j == b.size()) return 0;
    if (a[i] == b[j]) return 1 + lcs_oracle(a, b, i + 1, j + 1);
    return std::max(lcs_oracle(a, b, i + 1, j), lcs_oracle(a, b, i, j + 1));
}

double rouge_oracle(const std::vector<std::string>& a,
                    const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    double l = static_cast<double>(lcs_oracle(a, b));
    if (l == 0) return 0.0;
    double p = l / a.size(), r = l / b.size();
    return 2 * p * r / (p + r);
}

double f1_oracle(const nlohmann::json& pred, const nlohmann::json& ref) {
    int tp = 0, fp = 0, fn = 0;
    for (const auto& [k, v] : pred.items()) {
        if (ref.contains(k) && ref[k] == v)
            ++tp;
        else
            ++fp;
    }
    for (const auto& [k, v] : ref.items())
        if (!(pred.contains(k) && pred[k] == v)) ++fn;
    if (tp + fp + fn == 0) return 1.0;
    if (tp == 0) return 0.0;
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

void check_rouge_oracle(std::vector<std::string>& problems) {
    std::mt19937 rng(101);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
    std::uniform_int_distribution<int> len(0, 12);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    auto sequence = [&] {
        std::vector<std::string> out;
        int n = len(rng);
        for (int i = 0; i < n; ++i) out.push_back(vocab[pick(rng)]);
        return out;
    };
    auto join = [](const std::vector<std::string>& words) {
        std::string out;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i) out += ' ';
            out += words[i];
        }
        return out;
    };
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        auto a = sequence(), b = sequence();
        if (std::abs(rouge_l(join(a), join(b)) - rouge_oracle(a, b)) > 1e-12)
            ++mismatches;
    }
    expect(problems, mismatches == 0,
           std::to_string(mismatches) + " of 1000 pairs disagree with oracle");
}

void check_arg_f1(std::vector<std::string>& problems) {
    expect(problems,
           arg_f1(nlohmann::json::parse(R"({"a": 1, "b": 2})"),
                  nlohmann::json::parse(R"({"a": 1, "c": 3})")) == 0.5,
           "{a:1,b:2} vs {a:1,c:3} != 0.5");
    expect(problems,
           arg_f1(nlohmann::json::parse(R"({"x": 1, "y": 2, "z": 3})"),
                  nlohmann::json::parse(R"({"z": 3, "y": 2, "x": 1})")) == 1.0,
           "key permutation changed the score");
    auto self = nlohmann::json::parse(R"({"q": "text", "n": 7, "f": true})");
    expect(problems, arg_f1(self, self) == 1.0, "identity != 1.0");

    std::mt19937 rng(211);
    std::uniform_int_distribution<int> nkeys(0, 5), val(0, 3);
    const std::vector<std::string> keys = {"a", "b", "c", "d", "e", "f", "g"};
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    auto gen = [&] {
        nlohmann::json j = nlohmann::json::object();
        int n = nkeys(rng);
        for (int i = 0; i < n; ++i) j[keys[pick(rng)]] = val(rng);
        return j;
    };
    int mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        auto pred = gen(), ref = gen();
        if (std::abs(arg_f1(pred, ref) - f1_oracle(pred, ref)) > 1e-12)
            ++mismatches;
    }
    expect(problems, mismatches == 0,
           std::to_string(mismatches) + " of 500 pairs disagree with oracle");
}

// ---------------------------------------------------------------------------
// Synthetic trajectories for the dataset-pipeline checks.

Trajectory synthetic_trajectory(std::mt19937& rng, int serial) {
    static const std::vector<std::string> vocab = {
        "check", "the", "catalog", "first", "then", "filter", "it",
        "call",  "api", "fetch",   "list",  "next", "step",   "result"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    auto words = [&](int lo, int hi) {
        std::uniform_int_distribution<int> count(lo, hi);
        std::string out;
        int n = count(rng);
        for (int i = 0; i < n; ++i) {
            if (i) out += ' ';
            out += vocab[pick(rng)];
        }
        return out;
    };

    Trajectory t;
    t.instruction.id = "case-" + std::to_string(serial);
    t.instruction.text = words(4, 10);
    t.instruction.tool_ids = {"alpha_api", "beta_api"};
    std::uniform_int_distribution<int> caller_count(1, 5), coin(0, 2),
        arg(0, 99);
    int n_callers = caller_count(rng);
    for (int i = 0; i < n_callers; ++i) {
        Step s;
        s.index = i;
        s.rationale = words(3, 8);
        s.decision = Decision::Caller;
        ActionRecord a;
        a.name = coin(rng) == 0 ? "beta_api" : "alpha_api";
        a.raw_input = "{\"q\": \"" + words(1, 3) + "\", \"n\": " +
                      std::to_string(arg(rng)) + "}";
        a.args = nlohmann::json::parse(a.raw_input);
        s.action = std::move(a);
        s.observation = words(2, 6);
        t.steps.push_back(std::move(s));
    }
    switch (coin(rng)) {
        case 0: {
            Step s;
            s.index = n_callers;
            s.rationale = words(3, 6);
            s.decision = Decision::GiveUp;
            t.steps.push_back(std::move(s));
            t.outcome = Outcome::GaveUp;
            break;
        }
        case 1:
            t.outcome = Outcome::StepLimit;
            break;
        default: {
            Step s;
            s.index = n_callers;
            s.rationale = words(3, 6);
            s.decision = Decision::Summarizer;
            s.answer = words(4, 10);
            t.steps.push_back(std::move(s));
            t.outcome = Outcome::Finished;
            break;
        }
    }
    return t;
}

std::vector<Trajectory> synthetic_corpus(unsigned seed, int n,
                                         int id_base = 0) {
    std::mt19937 rng(seed);
    std::vector<Trajectory> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(synthetic_trajectory(rng, id_base + i));
    return out;
}

void check_glpft_identities(std::vector<std::string>& problems) {
    auto corpus = synthetic_corpus(307, 200);
    auto s1 = emit_stage1(corpus);
    auto s2 = emit_stage2(corpus, /*reuse=*/true);

    int steps = 0, callers = 0, finished = 0;
    for (const Trajectory& t : corpus) {
        steps += static_cast<int>(t.steps.size());
        for (const Step& s : t.steps)
            if (s.decision == Decision::Caller) ++callers;
        if (t.outcome == Outcome::Finished) ++finished;
    }
    expect(problems, s2.manifest.planner_count == steps,
           "planner count != total steps");
    expect(problems, s2.manifest.caller_count == callers,
           "caller count != caller decisions");
    expect(problems, s2.manifest.summarizer_count == finished,
           "summarizer count != finished trajectories");
    expect(problems, s1.manifest.global_count == steps,
           "global count != total steps");

    // Reconstruction: the role-sliced targets re-concatenate to the global
    // target of the same step, string-exactly.
    std::map<std::pair<std::string, int>, std::string> globals;
    for (const SftSample& s : s1.samples)
        globals[{s.instruction_id, s.step_index}] = s.target;
    int broken = 0;
    for (const Trajectory& t : corpus) {
        for (const Step& s : t.steps) {
            std::string rebuilt = planner_target(s);
            if (s.decision == Decision::Caller)
                rebuilt += "\n" + caller_target(s);
            else if (s.decision == Decision::Summarizer)
                rebuilt += "\nConclusion: " + *s.answer;
            if (globals[{t.instruction.id, s.index}] != rebuilt) ++broken;
        }
    }
    expect(problems, broken == 0,
           std::to_string(broken) + " steps fail reconstruction");
}

// ---------------------------------------------------------------------------
// Scripted end-to-end replay of the address-verification case.

std::shared_ptr<const ToolRegistry> address_registry() {
    auto reg = std::make_shared<ToolRegistry>();
    ToolSpec spec;
    spec.name = "verifyUSAddress";
    spec.description = "Verify and standardize a US postal address.";
    spec.handler = HandlerKind::MockTable;
    spec.table.push_back(
        {nlohmann::json{{"addressLine1", "321 Maple Dr"},
                        {"addressLine2", "Apt 12C"},
                        {"city", "Houston"},
                        {"state", "TX"},
                        {"zipCode", "77002"}},
         "{\"status\":\"valid\",\"standardizedAddress\":{\"addressLine1\":"
         "\"123 Main St\",\"addressLine2\":\"Apt 4B\",\"city\":\"New York\","
         "\"state\":\"NY\",\"zipCode\":\"10001\"}}"});
    reg->add(std::move(spec));
    return reg;
}

RunResult replay_address_case() {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->push(Role::Planner,
                  "I need to verify the address and then standardize it. "
                  "\n\nNext: caller.");
    backend->push(Role::Planner,
                  "The address is valid and has been successfully "
                  "standardized. \n\nNext: conclusion.");
    backend->push(Role::Caller,
                  "Action: verifyUSAddress\nAction Input: {\"addressLine1\": "
                  "\"321 Maple Dr\", \"addressLine2\":\"Apt 12C\", \"city\": "
                  "\"Houston\", \"state\": \"TX\", \"zipCode\": \"77002\"}");
    backend->push(Role::Summarizer,
                  "The address you provided is valid and has been "
                  "successfully standardized. The standardized address is "
                  "123 Main St, Apt 4B, New York, NY, 10001");

    AgentConfig cfg;
    cfg.planner = backend;
    cfg.caller = backend;
    cfg.summarizer = backend;
    cfg.registry = address_registry();

    Instruction q;
    q.id = "address-case";
    q.text =
        "I'm moving to a new apartment and need to update my address with "
        "various companies. Can you first verify if my new address is valid "
        "and then standardize it? Here's the address: 321 Maple Dr, Apt 12C, "
        "Houston, TX, 77002.";
    q.tool_ids = {"verifyUSAddress"};
    return run_instruction(cfg, q);
}

void check_scripted_replay(std::vector<std::string>& problems) {
    RunResult result = replay_address_case();
    expect(problems, result.outcome == Outcome::Finished,
           "outcome != Finished");
    expect(problems, result.counters.planner_calls == 2,
           "planner calls != 2");
    expect(problems, result.counters.tool_calls == 1, "tool calls != 1");
    expect(problems, validate_trajectory(result.trajectory).ok(),
           "trajectory fails validation");
    expect(problems,
           result.final_answer &&
               result.final_answer->find("123 Main St") != std::string::npos,
           "final answer missing the standardized address");

    auto serialize = [](const RunResult& r) {
        std::ostringstream out;
        write_trajectories(out, {r.trajectory});
        return out.str();
    };
    expect(problems, serialize(result) == serialize(replay_address_case()),
           "re-run is not byte-identical");
}

void check_perfect_agent(std::vector<std::string>& problems) {
    auto refs = synthetic_corpus(401, 50);
    std::map<std::pair<std::string, int>, std::string> preds;
    for (const Trajectory& t : refs)
        for (const Step& s : t.steps)
            preds[{t.instruction.id, s.index}] = global_target(s);
    auto report = evaluate_steps(build_cases(refs, preds));
    expect(problems, report.plan_acc == 100.0, "Plan ACC != 100.00");
    expect(problems, report.act_em == 100.0, "Act. EM != 100.00");
    expect(problems, report.arg_f1 == 100.0, "Arg. F1 != 100.00");
    expect(problems, report.rouge_l == 100.0, "Rouge-L != 100.00");
    expect(problems, report.hallu == 0.0, "Hallu. != 0.00");
}

void check_recovery_policy(std::vector<std::string>& problems) {
    auto reg = std::make_shared<ToolRegistry>();
    ToolSpec spec;
    spec.name = "search_video_for_simple_youtube_search";
    spec.handler = HandlerKind::MockTable;
    spec.default_observation =
        "{\"results\": [{\"title\": \"found it\", \"views\": 120000}]}";
    reg->add(std::move(spec));

    auto backend = std::make_shared<ScriptedBackend>();
    backend->push(Role::Planner,
                  "I will obtain detailed video information. Next: caller.");
    backend->push(Role::Planner,
                  "This API has broken and cannot be invoked; the caller "
                  "should try an alternative API. Next: caller.");
    backend->push(Role::Planner,
                  "The alternative API returned the video details. Next: "
                  "conclusion.");
    backend->push(Role::Caller,
                  "Action: video_for_simple_youtube_search\nAction Input: "
                  "{\"q\": \"video details\"}");
    backend->push(Role::Caller,
                  "Action: search_video_for_simple_youtube_search\nAction "
                  "Input: {\"q\": \"video details\"}");
    backend->push(Role::Summarizer,
                  "The video was found through the alternative API with "
                  "120000 views.");

    AgentConfig cfg;
    cfg.planner = backend;
    cfg.caller = backend;
    cfg.summarizer = backend;
    cfg.registry = reg;

    Instruction q;
    q.id = "youtube-recovery";
    q.text = "Find detailed information about the video.";
    q.tool_ids = {"search_video_for_simple_youtube_search"};

    RunResult result = run_instruction(cfg, q);
    expect(problems, result.outcome == Outcome::Finished,
           "outcome != Finished");
    expect(problems, result.counters.hallucinations == 1,
           "hallucination count != 1 (got " +
               std::to_string(result.counters.hallucinations) + ")");
    expect(problems,
           result.trajectory.n() == 3 &&
               result.trajectory.steps[0].observation->rfind(
                   "tool not found:", 0) == 0,
           "first step did not record the unknown-tool observation");
}

void check_reuse_verification(std::vector<std::string>& problems) {
    auto corpus = synthetic_corpus(501, 40);
    auto s1 = emit_stage1(corpus);

    auto with_reuse = emit_stage2(corpus, true);
    auto same = verify_instruction_reuse(s1.manifest, with_reuse.manifest);
    expect(problems, same.equal, "w/-reuse manifests do not match");

    auto alt = synthetic_corpus(502, 40, 1000);
    auto without = emit_stage2(corpus, false, &alt);
    auto diff = verify_instruction_reuse(s1.manifest, without.manifest);
    expect(problems, !diff.equal, "w/o-reuse manifests compare equal");
    expect(problems,
           diff.only_stage1.size() == 40 && diff.only_stage2.size() == 40,
           "diff is not the full symmetric difference");
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion("1. parser fidelity on execution-log excerpts", 1.0,
              check_parser_fidelity);
    criterion("2. rouge-l matches the brute-force LCS oracle", 5.0,
              check_rouge_oracle);
    criterion("3. arg f1 properties and pair-enumeration oracle", 5.0,
              check_arg_f1);
    criterion("4. dataset reorganization count and reconstruction identities",
              10.0, check_glpft_identities);
    criterion("5. end-to-end scripted replay is correct and deterministic",
              1.0, check_scripted_replay);
    criterion("6. perfect-agent predictions score exactly 100 / 0", 5.0,
              check_perfect_agent);
    criterion("7. recovery after a hallucinated tool name", 1.0,
              check_recovery_policy);
    criterion("8. instruction-reuse verification and full diff", 5.0,
              check_reuse_verification);
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s: %d criterion(s) failed, total %.2f s\n",
                g_failures ? "FAIL" : "OK", g_failures, total);
    return g_failures ? 1 : 0;
}
