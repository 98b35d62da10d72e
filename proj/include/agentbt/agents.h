#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "agentbt/gate.h"
#include "agentbt/marketdata.h"
#include "agentbt/portfolio.h"
#include "agentbt/prompts.h"
#include "agentbt/providers.h"
#include "agentbt/retrieval.h"
#include "agentbt/risk.h"

namespace agentbt {

/// What one agent saw and said on one day; becomes a trajectory record.
struct AgentTranscript {
    std::string agent;
    std::string input_text;
    std::string output_text;
    std::string reasoning_trace;
    std::string prompt_digest;
    bool flagged = false;
    std::string note;
};

/// Shared per-day inputs for every agent call.
struct AgentEnv {
    Date date;
    std::string symbol;
    Providers providers;
    const PromptLibrary* prompts = &PromptLibrary::builtin();
    ChatParams params;
    RetrievalConfig retrieval;
    KeywordTable keywords = default_keyword_table();
    GateConfig gate;
    bool rerank_embedding = true;  // off: hybrid order only, exact-duplicate news filtering
};

struct SentimentReport {
    double score = 0.0;
    std::string summary;
    int items_used = 0;
    int items_failed = 0;
};

struct FinanceIndicator {
    std::string name;
    std::string value_text;
    int citation_chunk = 0;
};

struct FinanceSummary {
    std::vector<FinanceIndicator> indicators;
    std::string summary;
    std::string period;
    bool available = false;  // a filing was visible on the day
    bool degraded = false;   // reranker or summarizer failed
};

struct Forecast {
    TrendProbabilities probs;
    TrendLabel gated;
    double confidence = 0.0;
    std::string rationale;
    bool fallback = false;
};

struct StylePreference {
    TradingStyle style = TradingStyle::balanced;
    double confidence = 0.5;
    std::string rationale;
};

struct Decision {
    ActionKind action = ActionKind::hold;
    std::string rationale;
};

template <class T>
struct AgentResult {
    T value;
    AgentTranscript transcript;
};

/// First brace-delimited substring of `text` that parses as a JSON object.
std::optional<nlohmann::json> parse_structured_output(std::string_view text);

/// Schema checks on a parsed object; each returns the typed value or an error message.
struct ParseError {
    std::string message;
};
std::variant<Decision, ParseError> parse_decision_output(const nlohmann::json& obj);
std::variant<StylePreference, ParseError> parse_style_output(const nlohmann::json& obj);
/// Renormalizes sums within 0.05 of one; larger deviations are rejected.
std::variant<Forecast, ParseError> parse_forecast_output(const nlohmann::json& obj);

/// Scores, filters, and analyzes the day's news; item calls run concurrently.
AgentResult<SentimentReport> run_news_agent(const AgentEnv& env, std::span<const NewsItem> news);

/// Caches chunked filings across days.
class ReportCache {
public:
    const std::vector<Chunk>& chunks(const ReportEntry& entry, const RetrievalConfig& cfg);

private:
    std::map<std::string, std::vector<Chunk>> chunks_;
};

AgentResult<FinanceSummary> run_report_agent(const AgentEnv& env, const ReportLibrary& reports,
                                             ReportCache& cache);

AgentResult<Forecast> run_forecast_agent(const AgentEnv& env, const IndicatorSnapshot& snap,
                                         double close, const SentimentReport& sentiment,
                                         const FinanceSummary& finance,
                                         std::string_view reflection);

struct StyleInputs {
    const AccountState* account = nullptr;
    const Forecast* forecast = nullptr;
    const SentimentReport* sentiment = nullptr;
    const FinanceSummary* finance = nullptr;
    StylePreference previous;
};

AgentResult<StylePreference> run_style_agent(const AgentEnv& env, const StyleInputs& in,
                                             std::string_view reflection);

struct DecisionInputs {
    double close = 0.0;
    const Forecast* forecast = nullptr;
    const SentimentReport* sentiment = nullptr;
    const FinanceSummary* finance = nullptr;
    const StylePreference* style = nullptr;
    const AccountState* account = nullptr;  // null when account state is withheld
    RiskThresholds thresholds;
};

AgentResult<Decision> run_decision_agent(const AgentEnv& env, const DecisionInputs& in,
                                         std::string_view reflection);

enum class ReflectionAudience { forecasting, style, decision };
std::string_view to_string(ReflectionAudience audience);

/// One labeled past outcome. `score` is w_hit (or minus the missed move) for
/// forecasts, the realized style return, or the decision reward.
struct ReflectionEntry {
    Date date;
    double score = 0.0;
    std::string pattern;
};

struct HighlightedCase {
    Date date;
    bool win = false;
    double score = 0.0;
    std::string pattern;
};

struct ReflectionSummary {
    std::size_t window_days = 0;
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::vector<HighlightedCase> highlighted_cases;
    std::string text;
};

/// Digest of the last `window` entries (history sorted by date): wins score > 0,
/// losses score < 0, highlights the two largest |score| of each.
ReflectionSummary build_reflection(std::span<const ReflectionEntry> history, std::size_t window,
                                   ReflectionAudience audience,
                                   const PromptLibrary& prompts = PromptLibrary::builtin());

std::string render_account(const PromptLibrary& prompts, const AccountState& account, double close);

}  // namespace agentbt
