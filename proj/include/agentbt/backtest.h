#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentbt/config.h"
#include "agentbt/datasynth.h"
#include "agentbt/marketdata.h"
#include "agentbt/portfolio.h"
#include "agentbt/retrieval.h"

namespace agentbt {

struct DataPaths {
    std::filesystem::path prices;
    std::optional<std::filesystem::path> news;
    std::optional<std::filesystem::path> reports;
};

struct MarketData {
    PriceSeries prices;
    std::vector<NewsItem> news;  // sorted by date
    ReportLibrary reports;
};

MarketData load_market_data(const DataPaths& paths);

struct EquityPoint {
    Date date;
    double equity = 0.0;
};

struct BacktestResult {
    std::vector<TradeRecord> trades;   // one per trading day, holds included
    std::vector<EquityPoint> equity;   // initial cash on the last warm-up day, then one per trading day
    std::vector<TrajectoryRecord> trajectories;
    std::vector<SftSample> sft;
    MetricsReport metrics;
    Date first_day;
    int flagged_calls = 0;
};

/// Runs the daily agent loop over the configured range. Throws DataError when the
/// range lacks prices, has a gap longer than 10 calendar days, or starts before
/// 21 warm-up closes are available.
BacktestResult simulate(const BacktestConfig& cfg, const MarketData& data);

/// Writes config.ini, trades.jsonl, equity.jsonl, trajectories.jsonl, sft.jsonl,
/// metrics.json, and run.json into `dir` (created if missing).
void write_artifacts(const BacktestConfig& cfg, const BacktestResult& result,
                     const std::filesystem::path& dir);

BacktestResult run_backtest(const BacktestConfig& cfg, const DataPaths& paths,
                            const std::filesystem::path& out_dir);

/// Metrics stored in a run directory.
MetricsReport read_metrics(const std::filesystem::path& run_dir);

/// Stored report disagrees with one recomputed from the run's files.
class ReplayMismatch : public DataError {
public:
    ReplayMismatch(std::string field, double stored, double recomputed);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Recomputes metrics from equity.jsonl and trades.jsonl and checks them against
/// metrics.json field by field, exactly.
MetricsReport replay(const std::filesystem::path& run_dir);

nlohmann::ordered_json to_json(const TradeRecord& record);
TradeRecord trade_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

std::vector<TradeRecord> read_trades(const std::filesystem::path& path);
std::vector<EquityPoint> read_equity(const std::filesystem::path& path);

}  // namespace agentbt
