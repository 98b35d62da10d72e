#pragma once

#include <span>
#include <string>
#include <string_view>

#include "agentbt/common.h"
#include "agentbt/risk.h"

namespace agentbt {

/// Cash plus a long position in one symbol. `equity` is cash + shares * mark_price
/// as of the last mark_to_market.
struct AccountState {
    double cash = 0.0;
    double shares = 0.0;
    double avg_entry = 0.0;  // meaningful only while shares > 0
    double mark_price = 0.0;
    double equity = 0.0;

    static AccountState all_cash(double cash);
};

void mark_to_market(AccountState& state, double price);

enum class ActionKind { buy, hold, sell };
enum class TradeOrigin { agent, forced_sell, take_profit };

std::string_view to_string(ActionKind kind);
std::string_view to_string(TradeOrigin origin);
ActionKind parse_action(std::string_view text);
TradeOrigin parse_origin(std::string_view text);

struct TradeAction {
    ActionKind kind = ActionKind::hold;
    TradingStyle style = TradingStyle::balanced;
    TradeOrigin origin = TradeOrigin::agent;
};

struct TradeRecord {
    Date date;
    TradeAction action;
    double fill_price = 0.0;
    double quantity = 0.0;
    double commission = 0.0;
    double post_equity = 0.0;
    std::string note;  // why a requested buy/sell degraded to hold
};

struct Execution {
    AccountState state;
    TradeRecord record;
};

/// Fraction of available cash a buy spends (commission included).
double buy_fraction(TradingStyle style);
/// Fraction of held shares a sell disposes; forced exits always liquidate fully.
double sell_fraction(TradingStyle style, TradeOrigin origin);

/// Executes one action at `price` and marks the result to that price. A buy
/// spends buy_fraction * cash in total so that notional + commission never
/// exceeds cash; a buy without cash or a sell without shares becomes a hold.
Execution apply_action(const AccountState& state, const TradeAction& action, double price,
                       double commission_rate, Date date = {});

/// price / avg_entry - 1; throws std::logic_error without a position.
double unrealized_pnl_pct(const AccountState& state, double price);

struct MetricsReport {
    double cr_pct = 0.0;
    double sharpe = 0.0;
    double mdd_pct = 0.0;
    double av_pct = 0.0;
    int n_trades = 0;
    bool degenerate_sharpe = false;

    bool operator==(const MetricsReport&) const = default;
};

struct SharpeResult {
    double value = 0.0;
    bool degenerate = false;
};

// Equity-curve metrics. Daily simple returns, sample stddev, sqrt(252)
// annualization, zero risk-free rate. All throw std::invalid_argument on
// curves that are too short or contain non-positive values.
double cumulative_return(std::span<const double> equity);
SharpeResult sharpe_ratio(std::span<const double> equity);
double max_drawdown(std::span<const double> equity);
double annualized_volatility(std::span<const double> equity);

MetricsReport compute_metrics(std::span<const double> equity, int n_trades);

}  // namespace agentbt
