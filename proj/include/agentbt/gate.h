#pragma once

#include <string>
#include <string_view>

#include "agentbt/marketdata.h"

namespace agentbt {

enum class Trend { up, down, sideways };

enum class GatePath { hard_intercept, soft_pass_up, soft_pass_down, default_sideways };

std::string_view to_string(Trend trend);
std::string_view to_string(GatePath path);
Trend parse_trend(std::string_view text);

struct TrendProbabilities {
    double p_up = 1.0 / 3.0;
    double p_down = 1.0 / 3.0;
    double p_side = 1.0 / 3.0;

    static TrendProbabilities uniform() { return {}; }
    double of(Trend trend) const;
    /// Each component in [0,1] and the sum within 1e-6 of one.
    bool valid() const;
};

struct TrendLabel {
    Trend label = Trend::sideways;
    GatePath path = GatePath::default_sideways;
    std::string reason;
};

struct GateConfig {
    double rsi_overheat = 70.0;
    double up_prob_threshold = 0.55;
    double down_prob_threshold = 0.55;
    double atr_breakout_coeff = 0.5;
    double breakout_floor_pct = 1.0;
    // healthy pullback: close within [pullback_sma_low_pct, 0] of the SMA-20 with RSI below
    double pullback_sma_low_pct = -3.0;
    double pullback_rsi_below = 40.0;

    /// Throws ConfigError when a threshold leaves its valid range.
    void validate() const;
};

/// max(floor, coeff * ATR); throws std::invalid_argument on negative ATR.
double breakout_threshold(double atr20s_pct, const GateConfig& cfg = {});

/// The hybrid gate: hard interception first, then the up/down soft passes,
/// else sideways. Throws std::invalid_argument when `probs` is not a distribution.
TrendLabel classify_trend(const TrendProbabilities& probs, const IndicatorSnapshot& snap,
                          const GateConfig& cfg = {});

}  // namespace agentbt
