#include "umi/backend.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace umi {

std::string apply_stop_sequences(std::string text,
                                 const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const std::string& stop : stops) {
        if (stop.empty()) continue;
        std::size_t pos = text.find(stop);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut != std::string::npos) text.resize(cut);
    return text;
}

void ScriptedBackend::push(Role role, std::string text) {
    queues_[role].push_back(std::move(text));
}

std::size_t ScriptedBackend::remaining(Role role) const {
    auto it = queues_.find(role);
    return it == queues_.end() ? 0 : it->second.size();
}

std::string ScriptedBackend::generate(const GenerationRequest& req) {
    auto it = queues_.find(req.role);
    if (it == queues_.end() || it->second.empty())
        throw BackendError("scripted backend exhausted for role " +
                           role_name(req.role));
    std::string text = std::move(it->second.front());
    it->second.pop_front();
    return apply_stop_sequences(std::move(text), req.stop_sequences);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError("cannot open script file " + path);
    auto backend = std::make_shared<ScriptedBackend>();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw BackendError("malformed script line " + std::to_string(lineno));
        auto role = role_from_string(j.at("role").get<std::string>());
        if (!role)
            throw BackendError("unknown role on script line " +
                               std::to_string(lineno));
        backend->push(*role, j.at("text").get<std::string>());
    }
    return backend;
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.timeout_ms <= 0) throw BackendError("timeout must be > 0");
    // Split a base URL like http://host:port/v1 into client base and path.
    std::size_t scheme = cfg_.endpoint.find("://");
    std::size_t path = scheme == std::string::npos
                           ? cfg_.endpoint.find('/')
                           : cfg_.endpoint.find('/', scheme + 3);
    if (path == std::string::npos) {
        base_ = cfg_.endpoint;
    } else {
        base_ = cfg_.endpoint.substr(0, path);
        path_prefix_ = cfg_.endpoint.substr(path);
        while (!path_prefix_.empty() && path_prefix_.back() == '/')
            path_prefix_.pop_back();
    }
}

std::string HttpBackend::generate(const GenerationRequest& req) {
    if (req.prompt.empty()) throw BackendError("empty prompt");
    nlohmann::json body;
    body["model"] = cfg_.model_name;
    body["messages"] = {{{"role", "user"}, {"content", req.prompt}}};
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_new_tokens;
    if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
    const std::string payload = body.dump();

    httplib::Client cli(base_);
    cli.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
    cli.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);

    httplib::Result res;
    for (int attempt = 0; ; ++attempt) {
        // Retries send byte-identical payloads.
        res = cli.Post(path_prefix_ + "/chat/completions", payload,
                       "application/json");
        if (res) break;
        if (attempt >= cfg_.max_retries)
            throw BackendError("transport error talking to " + base_ + ": " +
                                   httplib::to_string(res.error()),
                               true);
        std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
    }
    if (res->status < 200 || res->status >= 300)
        throw BackendError("backend returned HTTP " +
                           std::to_string(res->status));
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
        throw BackendError("malformed completion response");
    std::string text =
        j["choices"][0].at("message").at("content").get<std::string>();
    return apply_stop_sequences(std::move(text), req.stop_sequences);
}

std::shared_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (cfg.kind == BackendConfig::Kind::Http)
        return std::make_shared<HttpBackend>(cfg);
    return ScriptedBackend::load_file(cfg.script_path);
}

}  // namespace umi
