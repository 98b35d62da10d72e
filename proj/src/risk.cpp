#include "agentbt/risk.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace agentbt {

std::string_view to_string(TradingStyle style) {
    switch (style) {
        case TradingStyle::aggressive: return "aggressive";
        case TradingStyle::balanced: return "balanced";
        case TradingStyle::conservative: return "conservative";
    }
    return "balanced";
}

TradingStyle parse_style(std::string_view text) {
    if (text == "aggressive") return TradingStyle::aggressive;
    if (text == "balanced") return TradingStyle::balanced;
    if (text == "conservative") return TradingStyle::conservative;
    throw std::invalid_argument("unknown trading style '" + std::string(text) + "'");
}

std::string_view to_string(RiskAction action) {
    switch (action) {
        case RiskAction::none: return "none";
        case RiskAction::forced_sell: return "forced_sell";
        case RiskAction::take_profit: return "take_profit";
    }
    return "none";
}

const RiskMultipliers& RiskConfig::for_style(TradingStyle style) const {
    return multipliers[static_cast<std::size_t>(style)];
}

RiskMultipliers& RiskConfig::for_style(TradingStyle style) {
    return multipliers[static_cast<std::size_t>(style)];
}

void RiskConfig::validate() const {
    for (auto style : {TradingStyle::aggressive, TradingStyle::balanced, TradingStyle::conservative}) {
        const auto& m = for_style(style);
        if (!(m.m_sl > 0.0 && m.m_tp > m.m_sl)) {
            throw ConfigError("risk multipliers for " + std::string(to_string(style)) +
                              " must satisfy m_tp > m_sl > 0");
        }
    }
    if (!(floor >= 0.0)) throw ConfigError("risk.floor must be non-negative");
}

double sigma_d10(const PriceSeries& series, Date at) {
    return indicators::log_return_stddev10(series.closes_through(at));
}

RiskThresholds thresholds_from_sigma(TradingStyle style, double sigma, const RiskConfig& cfg) {
    const auto& m = cfg.for_style(style);
    return {sigma, std::max(m.m_sl * sigma, cfg.floor), std::max(m.m_tp * sigma, cfg.floor)};
}

RiskThresholds compute_thresholds(TradingStyle style, const PriceSeries& series, Date at,
                                  const RiskConfig& cfg) {
    return thresholds_from_sigma(style, sigma_d10(series, at), cfg);
}

RiskVerdict evaluate_position(double pnl_pct, const RiskThresholds& th) {
    const bool stop = pnl_pct <= -th.t_sl;
    const bool take = pnl_pct >= th.t_tp;
    if (stop && !take) return {RiskAction::forced_sell, pnl_pct};
    if (take && !stop) return {RiskAction::take_profit, pnl_pct};
    return {RiskAction::none, pnl_pct};
}

}  // namespace agentbt
