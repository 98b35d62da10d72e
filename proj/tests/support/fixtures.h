#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "agentbt/marketdata.h"
#include "agentbt/retrieval.h"

namespace fixture {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "agentbt");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Weekday dates starting at `first`.
std::vector<agentbt::Date> weekdays(agentbt::Date first, std::size_t n);
std::vector<agentbt::PriceBar> bars(const std::vector<double>& closes,
                                    agentbt::Date first = agentbt::Date::from_ymd(2023, 1, 2));
agentbt::PriceSeries series(const std::vector<double>& closes);

/// Geometric random walk with daily log-return stddev `sigma`.
std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double sigma = 0.02, double start = 100.0);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_prices(const std::filesystem::path& path, const std::vector<agentbt::PriceBar>& bars);

/// Minimal valid configuration text; extra sections are appended verbatim.
std::string config_text(const std::string& start, const std::string& end, const std::string& chat,
                        const std::string& extra = "", double commission = 0.001);

/// 21 warm-up closes followed by `trading_days` closes; the first trading close is a
/// strict 20-day high and later closes drift upward with small noise.
std::vector<double> breakout_closes(std::size_t trading_days, std::uint64_t seed);

/// Files for a compact run: prices.csv, news.jsonl, and reports/ in `dir`.
struct RunInputs {
    std::filesystem::path prices;
    std::filesystem::path news;
    std::filesystem::path reports;
    std::string start;  // first trading day
    std::string end;
    std::vector<agentbt::PriceBar> bars;
};
RunInputs write_run_inputs(const std::filesystem::path& dir, std::size_t trading_days = 30,
                           std::uint64_t seed = 11);

/// Reads every file of a run directory into name -> contents.
std::vector<std::pair<std::string, std::string>> snapshot_dir(const std::filesystem::path& dir);

}  // namespace fixture
