#include "agentbt/marketdata.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace agentbt {

PriceSeries::PriceSeries(std::vector<PriceBar> bars) : bars_(std::move(bars)) {
    if (bars_.empty()) throw DataError("price series is empty");
    for (std::size_t i = 0; i < bars_.size(); ++i) {
        if (!(bars_[i].close > 0.0) || !std::isfinite(bars_[i].close)) {
            throw DataError("non-positive price on " + bars_[i].date.iso());
        }
        if (i > 0) {
            if (bars_[i].date == bars_[i - 1].date) {
                throw DataError("duplicate date " + bars_[i].date.iso());
            }
            if (bars_[i].date < bars_[i - 1].date) {
                throw DataError("dates not increasing at " + bars_[i].date.iso());
            }
        }
    }
    closes_.reserve(bars_.size());
    for (const auto& bar : bars_) closes_.push_back(bar.close);
}

std::optional<std::size_t> PriceSeries::find(Date date) const {
    auto it = std::lower_bound(bars_.begin(), bars_.end(), date,
                               [](const PriceBar& bar, Date d) { return bar.date < d; });
    if (it == bars_.end() || it->date != date) return std::nullopt;
    return static_cast<std::size_t>(it - bars_.begin());
}

std::size_t PriceSeries::index_of(Date date) const {
    auto idx = find(date);
    if (!idx) throw DataError("no price bar on " + date.iso());
    return *idx;
}

std::span<const double> PriceSeries::closes_through(Date at) const {
    return std::span<const double>(closes_).first(index_of(at) + 1);
}

PriceSeries PriceSeries::truncated(Date last) const {
    std::vector<PriceBar> kept;
    for (const auto& bar : bars_) {
        if (bar.date > last) break;
        kept.push_back(bar);
    }
    return PriceSeries(std::move(kept));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

PriceSeries parse_price_csv(std::istream& in, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string(source) + ": missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    auto col = [&](std::string_view name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError(std::string(source) + ": header lacks '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_col = col("date");
    const std::size_t close_col = col("close");

    std::vector<PriceBar> bars;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        if (fields.size() <= std::max(date_col, close_col)) {
            throw DataError(where + ": unparseable row");
        }
        PriceBar bar;
        try {
            bar.date = Date::parse(fields[date_col]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        const std::string& text = fields[close_col];
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), bar.close);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw DataError(where + ": unparseable close '" + text + "'");
        }
        bars.push_back(bar);
    }
    try {
        return PriceSeries(std::move(bars));
    } catch (const DataError& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
}

PriceSeries load_price_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file " + path.string());
    return parse_price_csv(in, path.string());
}

namespace indicators {

namespace {

void require(std::span<const double> closes, std::size_t needed, const char* what) {
    if (closes.size() < needed) {
        throw InsufficientHistory(std::string(what) + " needs " + std::to_string(needed) +
                                  " closes, have " + std::to_string(closes.size()));
    }
}

double mean(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::span<const double> last_n(std::span<const double> closes, std::size_t n) {
    return closes.last(n);
}

}  // namespace

std::vector<double> trailing_log_returns(std::span<const double> closes, std::size_t count) {
    require(closes, count + 1, "log-return window");
    auto window = last_n(closes, count + 1);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::log(window[i + 1] / window[i]);
    return out;
}

double population_stddev(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double rsi14(std::span<const double> closes) {
    require(closes, kRsiPeriod + 1, "RSI-14");
    const double n = static_cast<double>(kRsiPeriod);
    double avg_gain = 0.0;
    double avg_loss = 0.0;
    for (std::size_t i = 1; i <= kRsiPeriod; ++i) {
        const double change = closes[i] - closes[i - 1];
        if (change > 0) avg_gain += change; else avg_loss -= change;
    }
    avg_gain /= n;
    avg_loss /= n;
    for (std::size_t i = kRsiPeriod + 1; i < closes.size(); ++i) {
        const double change = closes[i] - closes[i - 1];
        const double gain = change > 0 ? change : 0.0;
        const double loss = change < 0 ? -change : 0.0;
        avg_gain = (avg_gain * (n - 1.0) + gain) / n;
        avg_loss = (avg_loss * (n - 1.0) + loss) / n;
    }
    if (avg_loss == 0.0 && avg_gain == 0.0) return 50.0;
    if (avg_loss == 0.0) return 100.0;
    if (avg_gain == 0.0) return 0.0;
    const double rs = avg_gain / avg_loss;
    return 100.0 - 100.0 / (1.0 + rs);
}

double dist_sma20_pct(std::span<const double> closes) {
    require(closes, kWindow20, "SMA-20 distance");
    const double sma = mean(last_n(closes, kWindow20));
    return 100.0 * (closes.back() / sma - 1.0);
}

double dist_extreme20_pct(std::span<const double> closes, Side side) {
    require(closes, kWindow20, "20-day extreme distance");
    auto window = last_n(closes, kWindow20);
    const double extreme = side == Side::high ? *std::max_element(window.begin(), window.end())
                                              : *std::min_element(window.begin(), window.end());
    return 100.0 * (closes.back() / extreme - 1.0);
}

bool extreme_flag20(std::span<const double> closes, Side side) {
    require(closes, kWindow20, "20-day extreme flag");
    auto window = last_n(closes, kWindow20);
    const double current = window.back();
    // strict: the current close must beat every other close in the window
    for (std::size_t i = 0; i + 1 < window.size(); ++i) {
        if (side == Side::high ? window[i] >= current : window[i] <= current) return false;
    }
    return true;
}

double log_return_stddev10(std::span<const double> closes) {
    return population_stddev(trailing_log_returns(closes, kHvWindow));
}

double hv10_pct(std::span<const double> closes) {
    return 100.0 * log_return_stddev10(closes) * std::sqrt(kTradingDaysPerYear);
}

double mean_log_return20(std::span<const double> closes) {
    return mean(trailing_log_returns(closes, kWindow20));
}

double atr20s_pct(std::span<const double> closes) {
    const auto returns = trailing_log_returns(closes, kWindow20);
    const double r_bar = mean(returns);
    double ss = 0.0;
    for (double r : returns) ss += (r - r_bar) * (r - r_bar);
    return 100.0 * std::sqrt(ss / static_cast<double>(kWindow20));
}

}  // namespace indicators

double rsi14(const PriceSeries& series, Date at) {
    return indicators::rsi14(series.closes_through(at));
}
double dist_sma20_pct(const PriceSeries& series, Date at) {
    return indicators::dist_sma20_pct(series.closes_through(at));
}
double dist_extreme20_pct(const PriceSeries& series, Date at, Side side) {
    return indicators::dist_extreme20_pct(series.closes_through(at), side);
}
bool extreme_flag20(const PriceSeries& series, Date at, Side side) {
    return indicators::extreme_flag20(series.closes_through(at), side);
}
double hv10_pct(const PriceSeries& series, Date at) {
    return indicators::hv10_pct(series.closes_through(at));
}
double atr20s_pct(const PriceSeries& series, Date at) {
    return indicators::atr20s_pct(series.closes_through(at));
}
double mean_log_return20(const PriceSeries& series, Date at) {
    return indicators::mean_log_return20(series.closes_through(at));
}

IndicatorSnapshot build_snapshot(const PriceSeries& series, Date at) {
    const auto closes = series.closes_through(at);
    if (closes.size() < indicators::kWindow20 + 1) {
        throw InsufficientHistory("indicator snapshot needs 21 closes, have " +
                                  std::to_string(closes.size()));
    }
    IndicatorSnapshot snap;
    snap.date = at;
    snap.rsi14 = indicators::rsi14(closes);
    snap.dist_sma20_pct = indicators::dist_sma20_pct(closes);
    snap.dist_high20_pct = indicators::dist_extreme20_pct(closes, Side::high);
    snap.dist_low20_pct = indicators::dist_extreme20_pct(closes, Side::low);
    snap.new_high20 = indicators::extreme_flag20(closes, Side::high);
    snap.new_low20 = indicators::extreme_flag20(closes, Side::low);
    snap.hv10_pct = indicators::hv10_pct(closes);
    snap.atr20s_pct = indicators::atr20s_pct(closes);
    snap.mean_log_return20 = indicators::mean_log_return20(closes);
    return snap;
}

}  // namespace agentbt
