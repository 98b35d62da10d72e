#include "agentbt/agents.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>

namespace agentbt {

namespace {

using nlohmann::json;

std::string num(double v, int decimals = 4) { return format_fixed(v, decimals); }

std::string flag(bool b) { return b ? "true" : "false"; }

std::string format_messages(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += "\n\n";
        out += "[" + m.role + "]\n" + m.content;
    }
    return out;
}

template <class T>
struct Outcome {
    std::optional<T> value;
    bool provider_failed = false;
    AgentTranscript transcript;
};

// One chat exchange with at most `max_attempts` tries; later tries append the
// repair prompt. Provider failures are never retried.
template <class T, class Parse>
Outcome<T> converse(const AgentEnv& env, const std::string& agent, std::string system,
                    std::string user, Parse parse, int max_attempts = 2, int item = -1) {
    Outcome<T> out;
    auto& tr = out.transcript;
    tr.agent = agent;
    ChatRequest req;
    req.messages = {{"system", std::move(system)}, {"user", std::move(user)}};
    req.params = env.params;
    req.route = {agent, env.date, 1, item};
    tr.input_text = format_messages(req.messages);
    tr.prompt_digest = hex_digest(tr.input_text);

    std::string error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        req.route.attempt = attempt;
        ChatResponse resp;
        try {
            resp = env.providers.chat->complete(req);
        } catch (const std::exception& e) {
            out.provider_failed = true;
            tr.flagged = true;
            tr.note = std::string("provider failure: ") + e.what();
            return out;
        }
        tr.output_text = resp.content;
        tr.reasoning_trace = resp.reasoning_trace;
        if (auto obj = parse_structured_output(resp.content)) {
            auto parsed = parse(*obj);
            if (auto* v = std::get_if<T>(&parsed)) {
                out.value = std::move(*v);
                if (attempt > 1) tr.note = "repaired after: " + error;
                return out;
            }
            error = std::get<ParseError>(parsed).message;
        } else {
            error = "no JSON object found";
        }
        if (attempt < max_attempts) {
            req.messages.push_back({"assistant", resp.content});
            req.messages.push_back({"user", env.prompts->render("repair", {{"error", error}})});
        }
    }
    tr.flagged = true;
    tr.note = "unusable output: " + error;
    return out;
}

std::optional<double> number_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

std::string string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

struct NewsOpinion {
    double sentiment = 0.0;
    std::string summary;
};

std::variant<NewsOpinion, ParseError> parse_news(const json& obj) {
    const auto s = number_field(obj, "sentiment");
    if (!s) return ParseError{"missing numeric 'sentiment'"};
    if (!std::isfinite(*s) || *s < -1.0 || *s > 1.0) return ParseError{"'sentiment' outside [-1, 1]"};
    return NewsOpinion{*s, string_field(obj, "summary")};
}

std::variant<FinanceSummary, ParseError> parse_finance(const json& obj) {
    FinanceSummary out;
    auto sum = obj.find("summary");
    if (sum == obj.end() || !sum->is_string()) return ParseError{"missing string 'summary'"};
    out.summary = sum->get<std::string>();
    if (auto it = obj.find("indicators"); it != obj.end()) {
        if (!it->is_array()) return ParseError{"'indicators' must be an array"};
        for (const auto& ind : *it) {
            if (!ind.is_object()) return ParseError{"indicator entries must be objects"};
            const auto chunk = number_field(ind, "chunk");
            if (!chunk) return ParseError{"indicator without numeric 'chunk'"};
            FinanceIndicator fi;
            fi.name = string_field(ind, "name");
            if (auto v = ind.find("value"); v != ind.end()) {
                fi.value_text = v->is_string() ? v->get<std::string>() : v->dump();
            }
            fi.citation_chunk = static_cast<int>(*chunk);
            out.indicators.push_back(std::move(fi));
        }
    }
    return out;
}

std::string finance_text(const FinanceSummary& f) {
    if (f.indicators.empty()) return f.summary;
    std::string out = f.summary;
    for (const auto& ind : f.indicators) {
        out += "\n- " + ind.name + ": " + ind.value_text + " [chunk " + std::to_string(ind.citation_chunk) + "]";
    }
    return out;
}

}  // namespace

std::optional<json> parse_structured_output(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto j = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

std::variant<Decision, ParseError> parse_decision_output(const json& obj) {
    const auto action = string_field(obj, "action");
    if (action.empty()) return ParseError{"missing string 'action'"};
    Decision d;
    try {
        d.action = parse_action(trim(action));
    } catch (const std::exception&) {
        return ParseError{"'action' must be buy, hold, or sell"};
    }
    d.rationale = string_field(obj, "rationale");
    return d;
}

std::variant<StylePreference, ParseError> parse_style_output(const json& obj) {
    const auto style = string_field(obj, "style");
    if (style.empty()) return ParseError{"missing string 'style'"};
    StylePreference s;
    try {
        s.style = parse_style(trim(style));
    } catch (const std::exception&) {
        return ParseError{"'style' must be aggressive, balanced, or conservative"};
    }
    if (auto c = number_field(obj, "confidence")) {
        if (*c < 0.0 || *c > 1.0) return ParseError{"'confidence' outside [0, 1]"};
        s.confidence = *c;
    }
    s.rationale = string_field(obj, "rationale");
    return s;
}

std::variant<Forecast, ParseError> parse_forecast_output(const json& obj) {
    const auto up = number_field(obj, "up");
    const auto down = number_field(obj, "down");
    auto side = number_field(obj, "sideways");
    if (!side) side = number_field(obj, "side");
    if (!up || !down || !side) return ParseError{"need numeric 'up', 'down', and 'sideways'"};
    for (double p : {*up, *down, *side}) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) return ParseError{"probabilities must lie in [0, 1]"};
    }
    const double total = *up + *down + *side;
    if (std::abs(total - 1.0) > 0.05) {
        return ParseError{"probabilities sum to " + num(total) + ", not 1"};
    }
    Forecast f;
    f.probs = {*up / total, *down / total, *side / total};
    f.confidence = std::max({f.probs.p_up, f.probs.p_down, f.probs.p_side});
    if (auto c = number_field(obj, "confidence")) f.confidence = std::clamp(*c, 0.0, 1.0);
    f.rationale = string_field(obj, "rationale");
    return f;
}

AgentResult<SentimentReport> run_news_agent(const AgentEnv& env, std::span<const NewsItem> news) {
    AgentResult<SentimentReport> out;
    out.transcript.agent = "news";
    const auto& prompts = *env.prompts;
    if (news.empty()) {
        out.value.summary = prompts.render("notice.no_news", {});
        out.transcript.output_text = out.value.summary;
        out.transcript.prompt_digest = hex_digest("");
        return out;
    }

    const auto impact_query = prompts.render("news.impact_query", {});
    std::vector<ScoredNews> scored;
    int scoring_failures = 0;
    for (const auto& item : news) {
        try {
            scored.push_back(score_news(item, env.keywords, *env.providers.reranker, impact_query));
        } catch (const ProviderError&) {
            ScoredNews s;
            s.item = item;
            s.base = base_importance(item, env.keywords);
            s.influence = influence_score(s.base, 0.0);
            scored.push_back(std::move(s));
            ++scoring_failures;
        }
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredNews& a, const ScoredNews& b) { return a.influence > b.influence; });
    std::vector<ScoredNews> kept;
    if (env.rerank_embedding) {
        try {
            kept = dedupe(scored, *env.providers.embedding, env.retrieval);
        } catch (const ProviderError&) {
            kept = dedupe_exact(scored);
        }
    } else {
        kept = dedupe_exact(scored);
    }
    if (kept.size() > env.retrieval.news_top_k) kept.resize(env.retrieval.news_top_k);

    std::vector<std::future<Outcome<NewsOpinion>>> calls;
    calls.reserve(kept.size());
    const auto system = prompts.render("news.system", {});
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& s = kept[i];
        auto user = prompts.render("news.user", {{"date", env.date.iso()},
                                                 {"symbol", env.symbol},
                                                 {"influence", num(s.influence, 3)},
                                                 {"title", s.item.title},
                                                 {"body", s.item.body}});
        calls.push_back(std::async(std::launch::async, [&env, system, user = std::move(user), i] {
            return converse<NewsOpinion>(env, "news", system, user, parse_news, 1, static_cast<int>(i));
        }));
    }

    double weighted = 0.0, weights = 0.0;
    std::string inputs, outputs, traces, summary;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        auto r = calls[i].get();
        const auto sep = i == 0 ? "" : "\n\n---\n\n";
        inputs += sep + r.transcript.input_text;
        outputs += sep + r.transcript.output_text;
        if (!r.transcript.reasoning_trace.empty()) {
            traces += (traces.empty() ? "" : "\n\n") + r.transcript.reasoning_trace;
        }
        if (!r.value) {
            ++out.value.items_failed;
            continue;
        }
        ++out.value.items_used;
        weighted += kept[i].influence * r.value->sentiment;
        weights += kept[i].influence;
        if (!summary.empty()) summary += "\n";
        summary += "- [" + num(r.value->sentiment, 2) + "] " + kept[i].item.title;
        if (!r.value->summary.empty()) summary += ": " + r.value->summary;
    }
    out.value.score = weights > 0.0 ? weighted / weights : 0.0;
    out.value.summary = summary.empty() ? prompts.render("notice.no_news", {}) : summary;
    auto& tr = out.transcript;
    tr.input_text = inputs;
    tr.output_text = outputs;
    tr.reasoning_trace = traces;
    tr.prompt_digest = hex_digest(inputs);
    if (out.value.items_failed > 0 || scoring_failures > 0) {
        tr.flagged = true;
        tr.note = std::to_string(out.value.items_failed) + " item calls failed, " +
                  std::to_string(scoring_failures) + " relevance scores failed";
    }
    return out;
}

const std::vector<Chunk>& ReportCache::chunks(const ReportEntry& entry, const RetrievalConfig& cfg) {
    const auto key = entry.path.string();
    auto it = chunks_.find(key);
    if (it == chunks_.end()) {
        it = chunks_.emplace(key, chunk_report(ReportLibrary::read_text(entry), cfg, entry.period)).first;
    }
    return it->second;
}

AgentResult<FinanceSummary> run_report_agent(const AgentEnv& env, const ReportLibrary& reports,
                                             ReportCache& cache) {
    AgentResult<FinanceSummary> out;
    out.transcript.agent = "report";
    const auto& prompts = *env.prompts;
    const auto entry = reports.latest_visible(env.symbol, env.date);
    if (!entry) {
        out.value.summary = prompts.render("notice.no_report", {});
        out.transcript.output_text = out.value.summary;
        out.transcript.prompt_digest = hex_digest("");
        out.transcript.note = "no visible filing";
        return out;
    }
    out.value.available = true;
    out.value.period = entry->period;
    const auto& chunks = cache.chunks(*entry, env.retrieval);

    std::vector<ScoredChunk> passages;
    std::string degrade_note;
    try {
        auto top = retrieve_topk(prompts.render("report.query", {}), chunks, *env.providers.embedding,
                                 env.retrieval);
        if (env.rerank_embedding) {
            auto rr = rerank(prompts.render("report.rerank_query", {}), std::move(top),
                             *env.providers.reranker, env.retrieval);
            if (rr.degraded) degrade_note = "reranker failure: " + rr.error;
            passages = std::move(rr.passages);
        } else {
            if (top.size() > env.retrieval.rerank_top_k) top.resize(env.retrieval.rerank_top_k);
            passages = std::move(top);
        }
    } catch (const ProviderError& e) {
        // no embeddings: fall back to document order
        degrade_note = std::string("embedding failure: ") + e.what();
        for (std::size_t i = 0; i < chunks.size() && i < env.retrieval.rerank_top_k; ++i) {
            passages.push_back({chunks[i], 0.0, 0.0});
        }
    }

    std::string passage_text;
    for (const auto& p : passages) {
        if (!passage_text.empty()) passage_text += "\n";
        passage_text += "[chunk " + std::to_string(p.chunk.ordinal) + "] " + p.chunk.text;
    }
    auto user = prompts.render("report.user", {{"date", env.date.iso()},
                                               {"symbol", env.symbol},
                                               {"period", entry->period},
                                               {"filing_date", entry->date.iso()},
                                               {"passages", passage_text}});
    auto r = converse<FinanceSummary>(env, "report", prompts.render("report.system", {}), std::move(user),
                                      parse_finance);
    out.transcript = std::move(r.transcript);
    if (r.value) {
        out.value.summary = std::move(r.value->summary);
        for (auto& ind : r.value->indicators) {
            const bool cited = std::any_of(passages.begin(), passages.end(), [&](const ScoredChunk& p) {
                return p.chunk.ordinal == ind.citation_chunk;
            });
            if (cited) out.value.indicators.push_back(std::move(ind));
        }
    } else {
        out.value.degraded = true;
        out.value.summary = prompts.render("notice.report_degraded", {});
        for (std::size_t i = 0; i < passages.size() && i < 3; ++i) {
            out.value.summary += "\n[chunk " + std::to_string(passages[i].chunk.ordinal) + "] " +
                                 passages[i].chunk.text;
        }
    }
    if (!degrade_note.empty()) {
        out.value.degraded = true;
        out.transcript.flagged = true;
        out.transcript.note += (out.transcript.note.empty() ? "" : "; ") + degrade_note;
    }
    return out;
}

AgentResult<Forecast> run_forecast_agent(const AgentEnv& env, const IndicatorSnapshot& snap,
                                         double close, const SentimentReport& sentiment,
                                         const FinanceSummary& finance, std::string_view reflection) {
    const auto& prompts = *env.prompts;
    auto user = prompts.render("forecast.user", {{"date", env.date.iso()},
                                                 {"symbol", env.symbol},
                                                 {"close", num(close, 2)},
                                                 {"rsi14", num(snap.rsi14, 2)},
                                                 {"dist_sma20_pct", num(snap.dist_sma20_pct, 3)},
                                                 {"dist_high20_pct", num(snap.dist_high20_pct, 3)},
                                                 {"dist_low20_pct", num(snap.dist_low20_pct, 3)},
                                                 {"new_high20", flag(snap.new_high20)},
                                                 {"new_low20", flag(snap.new_low20)},
                                                 {"hv10_pct", num(snap.hv10_pct, 2)},
                                                 {"atr20s_pct", num(snap.atr20s_pct, 3)},
                                                 {"mean_log_return20", num(snap.mean_log_return20, 5)},
                                                 {"sentiment_score", num(sentiment.score, 3)},
                                                 {"sentiment_items", std::to_string(sentiment.items_used)},
                                                 {"sentiment_summary", sentiment.summary},
                                                 {"finance_summary", finance_text(finance)},
                                                 {"reflection", std::string(reflection)}});
    auto r = converse<Forecast>(env, "forecast", prompts.render("forecast.system", {}), std::move(user),
                                parse_forecast_output);
    AgentResult<Forecast> out;
    out.transcript = std::move(r.transcript);
    if (r.value) {
        out.value = std::move(*r.value);
    } else {
        out.value.probs = TrendProbabilities::uniform();
        out.value.confidence = 1.0 / 3.0;
        out.value.fallback = true;
    }
    out.value.gated = classify_trend(out.value.probs, snap, env.gate);
    return out;
}

AgentResult<StylePreference> run_style_agent(const AgentEnv& env, const StyleInputs& in,
                                             std::string_view reflection) {
    if (!in.account || !in.forecast || !in.sentiment || !in.finance) {
        throw std::invalid_argument("style agent needs account, forecast, sentiment, and finance inputs");
    }
    const auto& prompts = *env.prompts;
    const auto& f = *in.forecast;
    auto user = prompts.render("style.user", {{"date", env.date.iso()},
                                              {"symbol", env.symbol},
                                              {"account", render_account(prompts, *in.account, in.account->mark_price)},
                                              {"forecast_label", std::string(to_string(f.gated.label))},
                                              {"p_up", num(f.probs.p_up, 3)},
                                              {"p_down", num(f.probs.p_down, 3)},
                                              {"p_side", num(f.probs.p_side, 3)},
                                              {"sentiment_score", num(in.sentiment->score, 3)},
                                              {"finance_summary", finance_text(*in.finance)},
                                              {"reflection", std::string(reflection)}});
    auto r = converse<StylePreference>(env, "style", prompts.render("style.system", {}), std::move(user),
                                       parse_style_output);
    AgentResult<StylePreference> out;
    out.transcript = std::move(r.transcript);
    if (r.value) {
        out.value = std::move(*r.value);
    } else if (r.provider_failed) {
        out.value = in.previous;
    } else {
        out.value = StylePreference{TradingStyle::balanced, 0.5, {}};
    }
    return out;
}

AgentResult<Decision> run_decision_agent(const AgentEnv& env, const DecisionInputs& in,
                                         std::string_view reflection) {
    if (!in.forecast || !in.sentiment || !in.finance || !in.style) {
        throw std::invalid_argument("decision agent needs forecast, sentiment, finance, and style inputs");
    }
    const auto& prompts = *env.prompts;
    const auto& f = *in.forecast;
    const std::string account = in.account ? render_account(prompts, *in.account, in.close)
                                           : prompts.render("notice.no_account", {});
    auto user = prompts.render("decision.user", {{"date", env.date.iso()},
                                                 {"symbol", env.symbol},
                                                 {"close", num(in.close, 2)},
                                                 {"forecast_label", std::string(to_string(f.gated.label))},
                                                 {"forecast_path", std::string(to_string(f.gated.path))},
                                                 {"forecast_reason", f.gated.reason},
                                                 {"p_up", num(f.probs.p_up, 3)},
                                                 {"p_down", num(f.probs.p_down, 3)},
                                                 {"p_side", num(f.probs.p_side, 3)},
                                                 {"sentiment_score", num(in.sentiment->score, 3)},
                                                 {"sentiment_summary", in.sentiment->summary},
                                                 {"finance_summary", finance_text(*in.finance)},
                                                 {"style", std::string(to_string(in.style->style))},
                                                 {"style_confidence", num(in.style->confidence, 2)},
                                                 {"account", account},
                                                 {"stop_loss_pct", num(100.0 * in.thresholds.t_sl, 2)},
                                                 {"take_profit_pct", num(100.0 * in.thresholds.t_tp, 2)},
                                                 {"reflection", std::string(reflection)}});
    auto r = converse<Decision>(env, "decision", prompts.render("decision.system", {}), std::move(user),
                                parse_decision_output);
    AgentResult<Decision> out;
    out.transcript = std::move(r.transcript);
    if (r.value) out.value = std::move(*r.value);
    return out;
}

std::string_view to_string(ReflectionAudience audience) {
    switch (audience) {
        case ReflectionAudience::forecasting: return "forecast";
        case ReflectionAudience::style: return "style";
        case ReflectionAudience::decision: return "decision";
    }
    return "decision";
}

ReflectionSummary build_reflection(std::span<const ReflectionEntry> history, std::size_t window,
                                   ReflectionAudience audience, const PromptLibrary& prompts) {
    ReflectionSummary out;
    const auto n = std::min(window, history.size());
    out.window_days = n;
    if (n == 0) {
        out.text = prompts.render("reflection.empty", {});
        return out;
    }
    const auto recent = history.subspan(history.size() - n);
    std::vector<const ReflectionEntry*> wins, losses;
    for (const auto& e : recent) {
        if (e.score > 0.0) wins.push_back(&e);
        else if (e.score < 0.0) losses.push_back(&e);
    }
    out.wins = wins.size();
    out.losses = losses.size();
    auto by_magnitude = [](const ReflectionEntry* a, const ReflectionEntry* b) {
        return std::abs(a->score) > std::abs(b->score);
    };
    std::stable_sort(wins.begin(), wins.end(), by_magnitude);
    std::stable_sort(losses.begin(), losses.end(), by_magnitude);
    for (std::size_t i = 0; i < wins.size() && i < 2; ++i) {
        out.highlighted_cases.push_back({wins[i]->date, true, wins[i]->score, wins[i]->pattern});
    }
    for (std::size_t i = 0; i < losses.size() && i < 2; ++i) {
        out.highlighted_cases.push_back({losses[i]->date, false, losses[i]->score, losses[i]->pattern});
    }
    std::string cases;
    for (const auto& c : out.highlighted_cases) {
        if (!cases.empty()) cases += "\n";
        cases += prompts.render("reflection.case", {{"date", c.date.iso()},
                                                    {"outcome", c.win ? "success" : "failure"},
                                                    {"score", num(c.score, 4)},
                                                    {"pattern", c.pattern}});
    }
    out.text = prompts.render("reflection", {{"window", std::to_string(n)},
                                             {"audience", std::string(to_string(audience))},
                                             {"wins", std::to_string(out.wins)},
                                             {"losses", std::to_string(out.losses)},
                                             {"cases", cases}});
    return out;
}

std::string render_account(const PromptLibrary& prompts, const AccountState& account, double close) {
    const double equity = account.cash + account.shares * close;
    const bool holding = account.shares > 0.0 && account.avg_entry > 0.0;
    return prompts.render("account", {{"cash", num(account.cash, 2)},
                                      {"shares", num(account.shares, 4)},
                                      {"avg_entry", holding ? num(account.avg_entry, 4) : "n/a"},
                                      {"equity", num(equity, 2)},
                                      {"unrealized_pnl_pct",
                                       holding ? num(100.0 * unrealized_pnl_pct(account, close), 3) : "n/a"}});
}

}  // namespace agentbt
