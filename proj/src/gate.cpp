#include "agentbt/gate.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agentbt {

std::string_view to_string(Trend trend) {
    switch (trend) {
        case Trend::up: return "up";
        case Trend::down: return "down";
        case Trend::sideways: return "sideways";
    }
    return "sideways";
}

std::string_view to_string(GatePath path) {
    switch (path) {
        case GatePath::hard_intercept: return "hard_intercept";
        case GatePath::soft_pass_up: return "soft_pass_up";
        case GatePath::soft_pass_down: return "soft_pass_down";
        case GatePath::default_sideways: return "default_sideways";
    }
    return "default_sideways";
}

Trend parse_trend(std::string_view text) {
    if (text == "up") return Trend::up;
    if (text == "down") return Trend::down;
    if (text == "sideways" || text == "side") return Trend::sideways;
    throw std::invalid_argument("unknown trend '" + std::string(text) + "'");
}

double TrendProbabilities::of(Trend trend) const {
    switch (trend) {
        case Trend::up: return p_up;
        case Trend::down: return p_down;
        case Trend::sideways: return p_side;
    }
    return p_side;
}

bool TrendProbabilities::valid() const {
    for (double p : {p_up, p_down, p_side}) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
    }
    return std::abs(p_up + p_down + p_side - 1.0) <= 1e-6;
}

void GateConfig::validate() const {
    auto prob = [](double v, const char* name) {
        if (!(v > 0.0 && v < 1.0)) {
            throw ConfigError(std::string("gate.") + name + " must lie in (0,1)");
        }
    };
    prob(up_prob_threshold, "up_prob_threshold");
    prob(down_prob_threshold, "down_prob_threshold");
    if (!(rsi_overheat > 0.0 && rsi_overheat < 100.0)) {
        throw ConfigError("gate.rsi_overheat must lie in (0,100)");
    }
    if (!(atr_breakout_coeff >= 0.0) || !(breakout_floor_pct >= 0.0)) {
        throw ConfigError("gate breakout parameters must be non-negative");
    }
    if (!(pullback_sma_low_pct <= 0.0)) {
        throw ConfigError("gate.pullback_sma_low_pct must be <= 0");
    }
}

double breakout_threshold(double atr20s_pct, const GateConfig& cfg) {
    if (atr20s_pct < 0.0 || std::isnan(atr20s_pct)) {
        throw std::invalid_argument("breakout_threshold: negative ATR");
    }
    return std::max(cfg.breakout_floor_pct, cfg.atr_breakout_coeff * atr20s_pct);
}

TrendLabel classify_trend(const TrendProbabilities& probs, const IndicatorSnapshot& snap,
                          const GateConfig& cfg) {
    if (!probs.valid()) throw std::invalid_argument("classify_trend: invalid probabilities");

    const double threshold = breakout_threshold(snap.atr20s_pct, cfg);
    const double gap = std::abs(snap.dist_high20_pct);
    const std::string gap_text = "distance to 20-day high " + format_fixed(gap, 2) +
                                 "% vs breakout threshold " + format_fixed(threshold, 2) + "%";

    if (snap.rsi14 > cfg.rsi_overheat && gap > threshold) {
        return {Trend::sideways, GatePath::hard_intercept,
                "RSI " + format_fixed(snap.rsi14, 2) + " overheated; " + gap_text};
    }

    const bool breakout = snap.new_high20 || gap <= threshold;
    const bool pullback = snap.dist_sma20_pct >= cfg.pullback_sma_low_pct &&
                          snap.dist_sma20_pct <= 0.0 && snap.rsi14 < cfg.pullback_rsi_below;
    if (probs.p_up > cfg.up_prob_threshold && (breakout || pullback)) {
        return {Trend::up, GatePath::soft_pass_up,
                breakout ? "valid or near breakout; " + gap_text
                         : "healthy pullback to the 20-day SMA with RSI " +
                               format_fixed(snap.rsi14, 2)};
    }
    if (probs.p_down > cfg.down_prob_threshold) {
        return {Trend::down, GatePath::soft_pass_down,
                "downtrend probability " + format_fixed(probs.p_down, 3)};
    }
    return {Trend::sideways, GatePath::default_sideways, "no soft-pass condition met"};
}

}  // namespace agentbt
