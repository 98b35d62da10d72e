#pragma once

#include <array>
#include <string_view>

#include "agentbt/marketdata.h"

namespace agentbt {

enum class TradingStyle { aggressive, balanced, conservative };

std::string_view to_string(TradingStyle style);
TradingStyle parse_style(std::string_view text);

struct RiskMultipliers {
    double m_sl = 1.5;
    double m_tp = 2.5;
};

struct RiskConfig {
    // indexed by TradingStyle
    std::array<RiskMultipliers, 3> multipliers{{{2.0, 3.0}, {1.5, 2.5}, {1.0, 2.0}}};
    double floor = 0.005;
    bool enabled = true;

    const RiskMultipliers& for_style(TradingStyle style) const;
    RiskMultipliers& for_style(TradingStyle style);
    /// Requires m_tp > m_sl > 0 for every style and a non-negative floor.
    void validate() const;
};

struct RiskThresholds {
    double sigma_d10 = 0.0;
    double t_sl = 0.0;
    double t_tp = 0.0;
};

enum class RiskAction { none, forced_sell, take_profit };
std::string_view to_string(RiskAction action);

struct RiskVerdict {
    RiskAction action = RiskAction::none;
    double trigger_pnl = 0.0;
};

/// Unannualized population stddev of the last 10 daily log-returns.
double sigma_d10(const PriceSeries& series, Date at);

/// t = max(m * sigma, floor) for both bands.
RiskThresholds thresholds_from_sigma(TradingStyle style, double sigma, const RiskConfig& cfg);
RiskThresholds compute_thresholds(TradingStyle style, const PriceSeries& series, Date at,
                                  const RiskConfig& cfg);

/// forced_sell iff pnl <= -t_sl, take_profit iff pnl >= t_tp; none when both
/// hold (only possible with zero-width bands at pnl 0).
RiskVerdict evaluate_position(double pnl_pct, const RiskThresholds& th);

}  // namespace agentbt
