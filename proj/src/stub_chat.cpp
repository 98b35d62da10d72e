#include <algorithm>
#include <fstream>
#include <optional>
#include <set>

#include <json.hpp>

#include "agentbt/providers.h"

namespace agentbt {

namespace {

using nlohmann::ordered_json;

std::optional<std::string> line_value(std::string_view text, std::string_view key) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (line.substr(0, key.size()) == key) return trim(line.substr(key.size()));
        pos = end + 1;
    }
    return std::nullopt;
}

// The first user message carries the task; repair turns only restate the format.
const std::string& task_text(const ChatRequest& req) {
    for (const auto& m : req.messages) {
        if (m.role == "user") return m.content;
    }
    static const std::string empty;
    return empty;
}

double lexicon_sentiment(std::string_view text) {
    static const std::set<std::string> positive = {"beat", "beats", "growth", "record", "strong",
                                                   "surge", "surges", "upgrade", "raises", "rally",
                                                   "profit", "gain", "gains", "outperform"};
    static const std::set<std::string> negative = {"miss", "misses", "lawsuit", "weak", "decline",
                                                   "downgrade", "cut", "cuts", "loss", "losses",
                                                   "drop", "falls", "recall", "investigation"};
    int pos = 0, neg = 0;
    for (const auto& tok : tokenize(text)) {
        pos += positive.count(tok) ? 1 : 0;
        neg += negative.count(tok) ? 1 : 0;
    }
    if (pos + neg == 0) return 0.0;
    return static_cast<double>(pos - neg) / static_cast<double>(pos + neg);
}

std::string wrap(const ordered_json& payload) {
    return "Here is my assessment.\n```json\n" + payload.dump() + "\n```";
}

std::vector<StubChatProvider::ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProviderError("cannot open stub script " + path);
    std::vector<StubChatProvider::ScriptEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            StubChatProvider::ScriptEntry e;
            e.agent = j.at("agent").get<std::string>();
            e.date = j.value("date", std::string("*"));
            e.attempt = j.value("attempt", 0);
            e.item = j.value("item", -1);
            e.content = j.value("content", std::string{});
            e.reasoning = j.value("reasoning", std::string{});
            e.error = j.value("error", std::string{});
            entries.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw ProviderError(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return entries;
}

}  // namespace

StubChatProvider::StubChatProvider(std::string_view policy) : policy_(policy) {
    std::string_view rest = policy;
    while (!rest.empty()) {
        if (rest.substr(0, 9) == "scripted:") {
            script_ = load_script(std::string(rest.substr(9)));
            break;
        }
        const auto plus = rest.find('+');
        const auto token = rest.substr(0, plus);
        if (token == "sideways") {
            forecast_ = Forecast::sideways;
            decide_ = Decide::hold;
        } else if (token == "always-up") {
            forecast_ = Forecast::always_up;
            if (decide_ != Decide::echo) decide_ = Decide::buy;
        } else if (token == "echo-forecast") {
            decide_ = Decide::echo;
            if (policy.find("always-up") == std::string_view::npos &&
                policy.find("sideways") == std::string_view::npos) {
                forecast_ = Forecast::trend;
            }
        } else {
            throw ProviderError("unknown stub policy '" + std::string(token) + "'");
        }
        if (plus == std::string_view::npos) break;
        rest = rest.substr(plus + 1);
    }
}

ChatResponse StubChatProvider::complete(const ChatRequest& req) const {
    const auto& route = req.route;
    const std::string date = route.date.iso();
    for (const auto& e : script_) {
        if (e.agent != route.agent) continue;
        if (e.date != "*" && e.date != date) continue;
        if (e.attempt != 0 && e.attempt != route.attempt) continue;
        if (e.item != -1 && e.item != route.item) continue;
        if (!e.error.empty()) throw ProviderError("scripted failure: " + e.error);
        return {e.content, e.reasoning};
    }

    const std::string& prompt = task_text(req);
    const std::string trace = "stub:" + policy_ + " " + route.agent + " " + date;
    ordered_json out;

    if (route.agent == "news") {
        const double s = lexicon_sentiment(prompt);
        out["sentiment"] = s;
        out["summary"] = s > 0 ? "positive coverage" : (s < 0 ? "negative coverage" : "neutral coverage");
    } else if (route.agent == "report") {
        // cite up to three passages in the order presented
        out["indicators"] = ordered_json::array();
        std::size_t pos = 0;
        while (out["indicators"].size() < 3) {
            pos = prompt.find("[chunk ", pos);
            if (pos == std::string::npos) break;
            const auto close = prompt.find(']', pos);
            const int ordinal = std::stoi(prompt.substr(pos + 7, close - pos - 7));
            auto text_end = prompt.find('\n', close);
            std::string passage = trim(prompt.substr(close + 1, text_end - close - 1));
            if (passage.size() > 80) passage.resize(80);
            out["indicators"].push_back(
                {{"name", "passage_" + std::to_string(ordinal)}, {"value", passage}, {"chunk", ordinal}});
            pos = close;
        }
        out["summary"] = "key figures drawn from " + std::to_string(out["indicators"].size()) + " passages";
    } else if (route.agent == "forecast") {
        const Forecast mode = forecast_;
        double up = 0.2, down = 0.2, side = 0.6;
        if (mode == Forecast::always_up) {
            up = 0.8; down = 0.1; side = 0.1;
        } else if (mode == Forecast::trend) {
            const auto dist = line_value(prompt, "dist_sma20_pct:");
            const double d = dist ? std::stod(*dist) : 0.0;
            if (d > 0) { up = 0.7; down = 0.15; side = 0.15; }
            else if (d < 0) { up = 0.15; down = 0.7; side = 0.15; }
        }
        out["up"] = up;
        out["down"] = down;
        out["sideways"] = side;
        out["confidence"] = std::max({up, down, side});
        out["rationale"] = "stub forecast";
    } else if (route.agent == "style") {
        out["style"] = "balanced";
        out["confidence"] = 0.6;
        out["rationale"] = "stub style";
    } else if (route.agent == "decision") {
        std::string action = decide_ == Decide::buy ? "buy" : "hold";
        if (decide_ == Decide::echo) {
            const auto label = line_value(prompt, "forecast_label:").value_or("sideways");
            action = label == "up" ? "buy" : (label == "down" ? "sell" : "hold");
        }
        out["action"] = action;
        out["rationale"] = "stub decision";
    } else if (route.agent == "rerank") {
        return {"no", ""};
    } else {
        throw ProviderError("stub has no behaviour for agent '" + route.agent + "'");
    }
    return {wrap(out), trace};
}

}  // namespace agentbt
