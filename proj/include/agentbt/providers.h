#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "agentbt/common.h"
#include "agentbt/retrieval.h"

namespace agentbt {

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatParams {
    double temperature = 0.0;
    std::int64_t seed = 0;
    int max_tokens = 1024;
};

/// Which agent call this is. Used by stub policies for routing; never sent over the wire.
struct ChatRoute {
    std::string agent;
    Date date;
    int attempt = 1;
    int item = -1;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    ChatParams params;
    ChatRoute route;
};

struct ChatResponse {
    std::string content;
    std::string reasoning_trace;
};

/// Must tolerate concurrent calls. Transport or service failures throw ProviderError.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& request) const = 0;
};

/// Deterministic offline chat model. Policies (joined with '+'):
///   sideways       forecasts sideways-heavy probabilities, decides hold
///   always-up      forecasts up-heavy probabilities, decides buy
///   echo-forecast  decides from the gated forecast label (up/down/sideways -> buy/sell/hold);
///                  alone, forecasts by the sign of the SMA-20 distance
///   scripted:FILE  JSONL replies {agent, date|"*", attempt?, item?, content, reasoning?, error?}
///                  matched in file order; unmatched calls fall through to the other policies
class StubChatProvider final : public ChatProvider {
public:
    explicit StubChatProvider(std::string_view policy);
    ChatResponse complete(const ChatRequest& request) const override;

    struct ScriptEntry {
        std::string agent;
        std::string date;  // ISO date or "*"
        int attempt = 0;   // 0 matches any attempt
        int item = -1;     // -1 matches any news item
        std::string content;
        std::string reasoning;
        std::string error;
    };

private:
    enum class Forecast { sideways, always_up, trend };
    enum class Decide { hold, buy, echo };

    Forecast forecast_ = Forecast::sideways;
    Decide decide_ = Decide::hold;
    std::string policy_;
    std::vector<ScriptEntry> script_;
};

/// Endpoint pieces of `scheme://host[:port][/prefix]`.
struct EndpointUrl {
    std::string scheme_host_port;
    std::string path_prefix;
    static EndpointUrl parse(std::string_view url);
};

/// OpenAI-compatible `POST {endpoint}/chat/completions`. Also accepts the bare
/// `{content, reasoning_trace}` response shape.
class HttpChatProvider final : public ChatProvider {
public:
    HttpChatProvider(std::string endpoint, std::string model, std::string api_key,
                     double timeout_seconds = 60.0);
    ChatResponse complete(const ChatRequest& request) const override;

    std::string request_body(const ChatRequest& request) const;
    static ChatResponse parse_response(std::string_view body);

private:
    EndpointUrl url_;
    std::string model_;
    std::string api_key_;
    double timeout_seconds_;
};

/// Dense vectors from `POST {endpoint}/embeddings` (L2-normalized on receipt);
/// sparse lexical weights from the local hashed vocabulary.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string endpoint, std::string model, std::string api_key,
                          double timeout_seconds = 60.0);
    DenseVector dense(std::string_view text) const override;
    SparseVector sparse(std::string_view text) const override;

private:
    EndpointUrl url_;
    std::string model_;
    std::string api_key_;
    double timeout_seconds_;
    HashingEmbeddingProvider lexical_;
};

/// Yes/no relevance judged by a chat model. Without token probabilities the
/// answer degrades to 1 for "yes" and 0 otherwise.
class ChatReranker final : public RerankerProvider {
public:
    ChatReranker(std::shared_ptr<const ChatProvider> chat, std::string system_prompt,
                 std::string user_template);
    double relevance(std::string_view query, std::string_view passage) const override;

private:
    std::shared_ptr<const ChatProvider> chat_;
    std::string system_prompt_;
    std::string user_template_;
};

struct ProviderConfig {
    std::string chat = "stub:sideways";
    std::string embedding = "stub";
    std::string reranker = "stub";
    std::string endpoint;
    std::string model;
    std::string embedding_model;
    std::string api_key_env;
    double temperature = 0.0;
    int max_tokens = 1024;
    double timeout_seconds = 60.0;
};

struct Providers {
    std::shared_ptr<const ChatProvider> chat;
    std::shared_ptr<const EmbeddingProvider> embedding;
    std::shared_ptr<const RerankerProvider> reranker;
};

/// Builds providers from configuration; relative script paths resolve against
/// `base_dir`. Throws ProviderError for unknown kinds or missing credentials.
Providers make_providers(const ProviderConfig& cfg, const std::filesystem::path& base_dir);

}  // namespace agentbt
