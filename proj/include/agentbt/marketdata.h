#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "agentbt/common.h"

namespace agentbt {

struct PriceBar {
    Date date;
    double close = 0.0;
};

/// Daily closes, strictly increasing by date, every close > 0, never empty.
class PriceSeries {
public:
    explicit PriceSeries(std::vector<PriceBar> bars);

    std::span<const PriceBar> bars() const { return bars_; }
    std::span<const double> closes() const { return closes_; }
    std::size_t size() const { return bars_.size(); }
    const PriceBar& operator[](std::size_t i) const { return bars_[i]; }

    std::optional<std::size_t> find(Date date) const;
    /// Throws DataError when `date` is not a bar of the series.
    std::size_t index_of(Date date) const;
    /// Closes from the first bar through `at` inclusive.
    std::span<const double> closes_through(Date at) const;
    /// Bars dated on or before `last`; throws DataError if none remain.
    PriceSeries truncated(Date last) const;

private:
    std::vector<PriceBar> bars_;
    std::vector<double> closes_;
};

/// Reads a `date,close` CSV (extra columns ignored).
PriceSeries load_price_csv(const std::filesystem::path& path);
PriceSeries parse_price_csv(std::istream& in, std::string_view source);

enum class Side { high, low };

struct IndicatorSnapshot {
    Date date;
    double rsi14 = 50.0;
    double dist_sma20_pct = 0.0;
    double dist_high20_pct = 0.0;
    double dist_low20_pct = 0.0;
    bool new_high20 = false;
    bool new_low20 = false;
    double hv10_pct = 0.0;
    double atr20s_pct = 0.0;
    double mean_log_return20 = 0.0;
};

// Window kernels. Each takes the closes up to and including the evaluation day
// (the last element) and throws InsufficientHistory when the span is too short.
namespace indicators {

inline constexpr std::size_t kRsiPeriod = 14;
inline constexpr std::size_t kWindow20 = 20;
inline constexpr std::size_t kHvWindow = 10;
inline constexpr double kTradingDaysPerYear = 252.0;

/// Last `count` close-to-close log-returns ending at the final close.
std::vector<double> trailing_log_returns(std::span<const double> closes, std::size_t count);
double population_stddev(std::span<const double> values);

double rsi14(std::span<const double> closes);
double dist_sma20_pct(std::span<const double> closes);
double dist_extreme20_pct(std::span<const double> closes, Side side);
bool extreme_flag20(std::span<const double> closes, Side side);
/// Unannualized population stddev of the last 10 log-returns.
double log_return_stddev10(std::span<const double> closes);
double hv10_pct(std::span<const double> closes);
double mean_log_return20(std::span<const double> closes);
double atr20s_pct(std::span<const double> closes);

}  // namespace indicators

double rsi14(const PriceSeries& series, Date at);
double dist_sma20_pct(const PriceSeries& series, Date at);
double dist_extreme20_pct(const PriceSeries& series, Date at, Side side);
bool extreme_flag20(const PriceSeries& series, Date at, Side side);
double hv10_pct(const PriceSeries& series, Date at);
double atr20s_pct(const PriceSeries& series, Date at);
double mean_log_return20(const PriceSeries& series, Date at);

/// All indicator fields for `at`; needs at least 21 closes.
IndicatorSnapshot build_snapshot(const PriceSeries& series, Date at);

}  // namespace agentbt
