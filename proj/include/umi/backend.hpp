#pragma once

#include <deque>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "umi/templates.hpp"

namespace umi {

struct BackendConfig {
    enum class Kind { Http, Scripted };
    Kind kind = Kind::Scripted;
    std::string endpoint;    // http kind: base URL of an OpenAI-compatible server
    std::string model_name;
    int timeout_ms = 30000;
    int max_new_tokens = 512;
    double temperature = 0.0;  // greedy by default
    int max_retries = 2;       // transport errors only
    std::string script_path;   // scripted kind: JSONL of canned responses
};

struct GenerationRequest {
    std::string prompt;
    Role role = Role::Planner;
    std::vector<std::string> stop_sequences;
};

class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& msg, bool retryable = false)
        : std::runtime_error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

class Backend {
public:
    virtual ~Backend() = default;
    // Throws BackendError on failure. The result never contains a stop
    // sequence from the request.
    virtual std::string generate(const GenerationRequest& req) = 0;
};

// Ordered per-role queues of canned responses; strictly sequential, one run
// at a time. Exhaustion throws BackendError.
class ScriptedBackend : public Backend {
public:
    void push(Role role, std::string text);
    std::size_t remaining(Role role) const;
    std::string generate(const GenerationRequest& req) override;

    // JSONL records {"role": "planner"|"caller"|"summarizer", "text": str},
    // consumed in file order per role.
    static std::shared_ptr<ScriptedBackend> load_file(const std::string& path);

private:
    std::map<Role, std::deque<std::string>> queues_;
};

// POSTs {endpoint}/chat/completions and reads choices[0].message.content.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);
    std::string generate(const GenerationRequest& req) override;

private:
    BackendConfig cfg_;
    std::string base_;  // scheme://host:port
    std::string path_prefix_;
};

// Factory: Http -> HttpBackend, Scripted -> ScriptedBackend loaded from
// cfg.script_path.
std::shared_ptr<Backend> make_backend(const BackendConfig& cfg);

// Truncates at the first occurrence of any stop sequence.
std::string apply_stop_sequences(std::string text,
                                 const std::vector<std::string>& stops);

}  // namespace umi
