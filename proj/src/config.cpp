#include "agentbt/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace agentbt {

namespace {

std::string unquote(std::string v) {
    v = trim(v);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        v = v.substr(1, v.size() - 2);
    }
    return v;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const auto n = to_int(key, v);
    if (n < 0) throw ConfigError(key + ": must not be negative");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

Date to_date(const std::string& key, const std::string& v) {
    try {
        return Date::parse(v);
    } catch (const DataError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

using Setter = std::function<void(BacktestConfig&, const std::string& key, const std::string& value)>;

#define NUM(field) [](BacktestConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }
#define CNT(field) [](BacktestConfig& c, const std::string& k, const std::string& v) { c.field = to_count(k, v); }
#define FLAG(field) [](BacktestConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }
#define TEXT(field) [](BacktestConfig& c, const std::string&, const std::string& v) { c.field = v; }

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t{
            {"run.symbol", TEXT(symbol)},
            {"run.start", [](BacktestConfig& c, const std::string& k, const std::string& v) { c.start = to_date(k, v); }},
            {"run.end", [](BacktestConfig& c, const std::string& k, const std::string& v) { c.end = to_date(k, v); }},
            {"run.initial_cash", NUM(initial_cash)},
            {"run.commission_rate", NUM(commission_rate)},
            {"run.seed", [](BacktestConfig& c, const std::string& k, const std::string& v) { c.seed = to_int(k, v); }},
            {"run.reflection_window", CNT(reflection_window)},
            {"run.keywords", TEXT(keywords_file)},
            {"run.prompts", TEXT(prompts_dir)},

            {"provider.chat", TEXT(provider.chat)},
            {"provider.embedding", TEXT(provider.embedding)},
            {"provider.reranker", TEXT(provider.reranker)},
            {"provider.endpoint", TEXT(provider.endpoint)},
            {"provider.model", TEXT(provider.model)},
            {"provider.embedding_model", TEXT(provider.embedding_model)},
            {"provider.api_key_env", TEXT(provider.api_key_env)},
            {"provider.temperature", NUM(provider.temperature)},
            {"provider.max_tokens", [](BacktestConfig& c, const std::string& k, const std::string& v) {
                 c.provider.max_tokens = static_cast<int>(to_int(k, v));
             }},
            {"provider.timeout_seconds", NUM(provider.timeout_seconds)},

            {"flags.risk_management", FLAG(risk.enabled)},
            {"flags.self_reflection", FLAG(flags.self_reflection)},
            {"flags.rerank_embedding", FLAG(flags.rerank_embedding)},
            {"flags.style_and_state", FLAG(flags.style_and_state)},

            {"gate.rsi_overheat", NUM(gate.rsi_overheat)},
            {"gate.up_prob_threshold", NUM(gate.up_prob_threshold)},
            {"gate.down_prob_threshold", NUM(gate.down_prob_threshold)},
            {"gate.atr_breakout_coeff", NUM(gate.atr_breakout_coeff)},
            {"gate.breakout_floor_pct", NUM(gate.breakout_floor_pct)},
            {"gate.pullback_sma_low_pct", NUM(gate.pullback_sma_low_pct)},
            {"gate.pullback_rsi_below", NUM(gate.pullback_rsi_below)},

            {"risk.enabled", FLAG(risk.enabled)},
            {"risk.floor", NUM(risk.floor)},

            {"retrieval.w_dense", NUM(retrieval.w_dense)},
            {"retrieval.w_sparse", NUM(retrieval.w_sparse)},
            {"retrieval.hybrid_top_k", CNT(retrieval.hybrid_top_k)},
            {"retrieval.rerank_top_k", CNT(retrieval.rerank_top_k)},
            {"retrieval.dedup_cosine", NUM(retrieval.dedup_cosine)},
            {"retrieval.window_sentences", CNT(retrieval.window_sentences)},
            {"retrieval.stride_sentences", CNT(retrieval.stride_sentences)},
            {"retrieval.news_top_k", CNT(retrieval.news_top_k)},

            {"band.alpha", NUM(band.alpha)},
            {"band.epsilon_min", NUM(band.epsilon_min)},
            {"reward.beta", NUM(reward.beta)},
            {"reward.gamma", NUM(reward.gamma)},
            {"sft.whit_min", NUM(sft.whit_min)},
            {"sft.min_reward", NUM(sft.min_reward)},
        };
        for (auto style : {TradingStyle::aggressive, TradingStyle::balanced, TradingStyle::conservative}) {
            const std::string name(to_string(style));
            t["risk." + name + "_sl"] = [style](BacktestConfig& c, const std::string& k, const std::string& v) {
                c.risk.for_style(style).m_sl = to_double(k, v);
            };
            t["risk." + name + "_tp"] = [style](BacktestConfig& c, const std::string& k, const std::string& v) {
                c.risk.for_style(style).m_tp = to_double(k, v);
            };
        }
        return t;
    }();
    return table;
}

#undef NUM
#undef CNT
#undef FLAG
#undef TEXT

}  // namespace

void BacktestConfig::validate() const {
    if (symbol.empty()) throw ConfigError("run.symbol is required");
    if (end < start) throw ConfigError("run.end precedes run.start");
    if (!(initial_cash > 0.0)) throw ConfigError("run.initial_cash must be positive");
    if (!(commission_rate >= 0.0 && commission_rate < 1.0)) {
        throw ConfigError("run.commission_rate must lie in [0, 1)");
    }
    if (provider.max_tokens <= 0) throw ConfigError("provider.max_tokens must be positive");
    if (!(provider.timeout_seconds > 0.0)) throw ConfigError("provider.timeout_seconds must be positive");
    if (sft.whit_min < 0.0 || sft.whit_min > 1.0) throw ConfigError("sft.whit_min must lie in [0, 1]");
    gate.validate();
    risk.validate();
    band.validate();
    reward.validate();
    retrieval.validate();
}

BacktestConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }

    BacktestConfig cfg;
    cfg.base_dir = base_dir;
    cfg.source_text = std::string(text);
    const auto& table = setters();
    for (const auto& [section, entries] : tree) {
        if (entries.empty()) {
            throw ConfigError("key '" + section + "' must belong to a section");
        }
        for (const auto& [key, node] : entries) {
            const auto full = section + "." + key;
            auto it = table.find(full);
            if (it == table.end()) throw ConfigError("unknown configuration key '" + full + "'");
            it->second(cfg, full, unquote(node.get_value<std::string>()));
        }
    }
    for (const char* key : {"run.start", "run.end"}) {
        if (!tree.get_child_optional(key)) throw ConfigError(std::string(key) + " is required");
    }
    cfg.validate();
    return cfg;
}

BacktestConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read configuration " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

}  // namespace agentbt
