#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "agentbt/prompts.h"
#include "agentbt/providers.h"

namespace agentbt {

namespace {

using nlohmann::json;

httplib::Result post_json(const EndpointUrl& url, const std::string& path, const std::string& body,
                          const std::string& api_key, double timeout_seconds) {
    httplib::Client client(url.scheme_host_port);
    const auto secs = static_cast<time_t>(timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    return client.Post(url.path_prefix + path, headers, body, "application/json");
}

std::string checked_body(const httplib::Result& res, std::string_view what) {
    if (!res) {
        throw ProviderError(std::string(what) + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(std::string(what) + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
}

}  // namespace

EndpointUrl EndpointUrl::parse(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw ProviderError("endpoint '" + std::string(url) + "' lacks a scheme");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    EndpointUrl out;
    out.scheme_host_port = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) out.path_prefix = std::string(url.substr(path_start));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

HttpChatProvider::HttpChatProvider(std::string endpoint, std::string model, std::string api_key,
                                   double timeout_seconds)
    : url_(EndpointUrl::parse(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpChatProvider::request_body(const ChatRequest& request) const {
    nlohmann::ordered_json body;
    body["model"] = model_;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = request.params.temperature;
    body["seed"] = request.params.seed;
    body["max_tokens"] = request.params.max_tokens;
    return body.dump();
}

ChatResponse HttpChatProvider::parse_response(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string("chat response is not JSON: ") + e.what());
    }
    auto text_of = [](const json& obj, const char* key) -> std::string {
        auto it = obj.find(key);
        return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string{};
    };
    ChatResponse out;
    if (auto choices = j.find("choices"); choices != j.end() && choices->is_array() && !choices->empty()) {
        const auto& msg = (*choices)[0].value("message", json::object());
        out.content = text_of(msg, "content");
        out.reasoning_trace = text_of(msg, "reasoning_content");
        if (out.reasoning_trace.empty()) out.reasoning_trace = text_of(msg, "reasoning");
        return out;
    }
    if (j.contains("content")) {
        out.content = text_of(j, "content");
        out.reasoning_trace = text_of(j, "reasoning_trace");
        return out;
    }
    throw ProviderError("chat response has neither choices nor content");
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request) const {
    const auto res = post_json(url_, "/chat/completions", request_body(request), api_key_, timeout_seconds_);
    return parse_response(checked_body(res, "chat completion"));
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::string model,
                                             std::string api_key, double timeout_seconds)
    : url_(EndpointUrl::parse(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

DenseVector HttpEmbeddingProvider::dense(std::string_view text) const {
    nlohmann::ordered_json body{{"model", model_}, {"input", std::string(text)}};
    const auto res = post_json(url_, "/embeddings", body.dump(), api_key_, timeout_seconds_);
    DenseVector v;
    try {
        const auto j = json::parse(checked_body(res, "embedding"));
        v = j.at("data").at(0).at("embedding").get<DenseVector>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what());
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

SparseVector HttpEmbeddingProvider::sparse(std::string_view text) const {
    return lexical_.sparse(text);
}

ChatReranker::ChatReranker(std::shared_ptr<const ChatProvider> chat, std::string system_prompt,
                           std::string user_template)
    : chat_(std::move(chat)),
      system_prompt_(std::move(system_prompt)),
      user_template_(std::move(user_template)) {}

double ChatReranker::relevance(std::string_view query, std::string_view passage) const {
    ChatRequest req;
    req.messages.push_back({"system", system_prompt_});
    req.messages.push_back(
        {"user", render_template(user_template_, {{"query", std::string(query)},
                                                  {"passage", std::string(passage)}})});
    req.params.max_tokens = 4;
    req.route.agent = "rerank";
    const auto tokens = tokenize(chat_->complete(req).content);
    return !tokens.empty() && tokens.front() == "yes" ? 1.0 : 0.0;
}

Providers make_providers(const ProviderConfig& cfg, const std::filesystem::path& base_dir) {
    std::string api_key;
    auto need_live = [&](std::string_view what) {
        if (cfg.endpoint.empty()) {
            throw ProviderError(std::string(what) + " provider needs provider.endpoint");
        }
        if (!cfg.api_key_env.empty()) {
            const char* value = std::getenv(cfg.api_key_env.c_str());
            if (value == nullptr || *value == '\0') {
                throw ProviderError("environment variable " + cfg.api_key_env + " is not set");
            }
            api_key = value;
        }
    };

    Providers p;
    if (cfg.chat.rfind("stub:", 0) == 0) {
        std::string policy = cfg.chat.substr(5);
        if (auto pos = policy.find("scripted:"); pos != std::string::npos) {
            std::filesystem::path script = policy.substr(pos + 9);
            if (script.is_relative()) script = base_dir / script;
            policy = policy.substr(0, pos + 9) + script.string();
        }
        p.chat = std::make_shared<StubChatProvider>(policy);
    } else if (cfg.chat == "http") {
        need_live("chat");
        p.chat = std::make_shared<HttpChatProvider>(cfg.endpoint, cfg.model, api_key, cfg.timeout_seconds);
    } else {
        throw ProviderError("unknown chat provider '" + cfg.chat + "'");
    }

    if (cfg.embedding == "stub") {
        p.embedding = std::make_shared<HashingEmbeddingProvider>();
    } else if (cfg.embedding == "http") {
        need_live("embedding");
        p.embedding = std::make_shared<HttpEmbeddingProvider>(
            cfg.endpoint, cfg.embedding_model.empty() ? cfg.model : cfg.embedding_model, api_key,
            cfg.timeout_seconds);
    } else {
        throw ProviderError("unknown embedding provider '" + cfg.embedding + "'");
    }

    if (cfg.reranker == "stub") {
        p.reranker = std::make_shared<KeywordReranker>();
    } else if (cfg.reranker == "chat") {
        const auto& prompts = PromptLibrary::builtin();
        p.reranker = std::make_shared<ChatReranker>(p.chat, prompts.raw("rerank.system"),
                                                    prompts.raw("rerank.user"));
    } else {
        throw ProviderError("unknown reranker provider '" + cfg.reranker + "'");
    }
    return p;
}

}  // namespace agentbt
