#include "agentbt/portfolio.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace agentbt {

AccountState AccountState::all_cash(double cash) {
    AccountState s;
    s.cash = cash;
    s.equity = cash;
    return s;
}

void mark_to_market(AccountState& state, double price) {
    state.mark_price = price;
    state.equity = state.cash + state.shares * price;
}

std::string_view to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::buy: return "buy";
        case ActionKind::hold: return "hold";
        case ActionKind::sell: return "sell";
    }
    return "hold";
}

std::string_view to_string(TradeOrigin origin) {
    switch (origin) {
        case TradeOrigin::agent: return "agent";
        case TradeOrigin::forced_sell: return "forced_sell";
        case TradeOrigin::take_profit: return "take_profit";
    }
    return "agent";
}

ActionKind parse_action(std::string_view text) {
    if (text == "buy") return ActionKind::buy;
    if (text == "hold") return ActionKind::hold;
    if (text == "sell") return ActionKind::sell;
    throw std::invalid_argument("unknown action '" + std::string(text) + "'");
}

TradeOrigin parse_origin(std::string_view text) {
    if (text == "agent") return TradeOrigin::agent;
    if (text == "forced_sell") return TradeOrigin::forced_sell;
    if (text == "take_profit") return TradeOrigin::take_profit;
    throw std::invalid_argument("unknown trade origin '" + std::string(text) + "'");
}

double buy_fraction(TradingStyle style) {
    return style == TradingStyle::conservative ? 0.5 : 1.0;
}

double sell_fraction(TradingStyle style, TradeOrigin origin) {
    if (origin != TradeOrigin::agent) return 1.0;
    return style == TradingStyle::aggressive ? 0.5 : 1.0;
}

Execution apply_action(const AccountState& state, const TradeAction& action, double price,
                       double commission_rate, Date date) {
    if (!(price > 0.0)) throw std::invalid_argument("apply_action: price must be positive");
    if (!(commission_rate >= 0.0)) throw std::invalid_argument("apply_action: negative commission");

    Execution out{state, {}};
    auto& s = out.state;
    auto& rec = out.record;
    rec.date = date;
    rec.action = action;
    rec.fill_price = price;

    switch (action.kind) {
        case ActionKind::buy: {
            if (!(state.cash > 0.0)) {
                rec.action.kind = ActionKind::hold;
                rec.note = "buy skipped: no cash";
                break;
            }
            const double spend = buy_fraction(action.style) * state.cash;
            const double notional = spend / (1.0 + commission_rate);
            const double qty = notional / price;
            const double held = state.shares;
            s.cash = state.cash - spend;
            s.shares = held + qty;
            s.avg_entry = (held * state.avg_entry + qty * price) / s.shares;
            rec.quantity = qty;
            rec.commission = spend - notional;
            break;
        }
        case ActionKind::sell: {
            if (!(state.shares > 0.0)) {
                rec.action.kind = ActionKind::hold;
                rec.note = "sell skipped: no position";
                break;
            }
            const double fraction = sell_fraction(action.style, action.origin);
            const double qty = fraction >= 1.0 ? state.shares : fraction * state.shares;
            const double proceeds = qty * price;
            const double commission = commission_rate * proceeds;
            s.cash = state.cash + proceeds - commission;
            s.shares = fraction >= 1.0 ? 0.0 : state.shares - qty;
            if (s.shares == 0.0) s.avg_entry = 0.0;
            rec.quantity = qty;
            rec.commission = commission;
            break;
        }
        case ActionKind::hold:
            break;
    }
    mark_to_market(s, price);
    rec.post_equity = s.equity;
    return out;
}

double unrealized_pnl_pct(const AccountState& state, double price) {
    if (!(state.shares > 0.0) || !(state.avg_entry > 0.0)) {
        throw std::logic_error("unrealized_pnl_pct: no open position");
    }
    return price / state.avg_entry - 1.0;
}

namespace {

void require_curve(std::span<const double> equity, std::size_t min_len, const char* what) {
    if (equity.size() < min_len) {
        throw std::invalid_argument(std::string(what) + ": equity curve needs at least " +
                                    std::to_string(min_len) + " points");
    }
    for (double e : equity) {
        if (!(e > 0.0)) throw std::invalid_argument(std::string(what) + ": non-positive equity");
    }
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

// Sample (n-1) moments of daily simple returns.
Moments return_moments(std::span<const double> equity) {
    const std::size_t n = equity.size() - 1;
    double sum = 0.0;
    for (std::size_t i = 1; i < equity.size(); ++i) sum += equity[i] / equity[i - 1] - 1.0;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 1; i < equity.size(); ++i) {
        const double d = (equity[i] / equity[i - 1] - 1.0) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

constexpr double kAnnualization = 252.0;

}  // namespace

double cumulative_return(std::span<const double> equity) {
    require_curve(equity, 1, "cumulative_return");
    return 100.0 * (equity.back() / equity.front() - 1.0);
}

SharpeResult sharpe_ratio(std::span<const double> equity) {
    require_curve(equity, 3, "sharpe_ratio");
    const auto m = return_moments(equity);
    if (m.stddev == 0.0) return {0.0, true};
    return {m.mean / m.stddev * std::sqrt(kAnnualization), false};
}

double max_drawdown(std::span<const double> equity) {
    require_curve(equity, 1, "max_drawdown");
    double peak = equity.front();
    double worst = 0.0;
    for (double e : equity) {
        peak = std::max(peak, e);
        worst = std::min(worst, e / peak - 1.0);
    }
    return 100.0 * worst;
}

double annualized_volatility(std::span<const double> equity) {
    require_curve(equity, 3, "annualized_volatility");
    return 100.0 * return_moments(equity).stddev * std::sqrt(kAnnualization);
}

MetricsReport compute_metrics(std::span<const double> equity, int n_trades) {
    MetricsReport r;
    r.cr_pct = cumulative_return(equity);
    r.mdd_pct = max_drawdown(equity);
    r.n_trades = n_trades;
    if (equity.size() >= 3) {
        const auto sharpe = sharpe_ratio(equity);
        r.sharpe = sharpe.value;
        r.degenerate_sharpe = sharpe.degenerate;
        r.av_pct = annualized_volatility(equity);
    } else {
        r.degenerate_sharpe = true;
    }
    return r;
}

}  // namespace agentbt
