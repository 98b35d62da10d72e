#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agentbt/gate.h"
#include "agentbt/marketdata.h"
#include "agentbt/portfolio.h"
#include "agentbt/risk.h"

namespace agentbt {

struct BandConfig {
    double alpha = 1.0;
    double epsilon_min = 0.005;
    void validate() const;
};

struct RewardConfig {
    double beta = 0.2;
    double gamma = 1.0;
    void validate() const;
};

struct ForecastLabel {
    double epsilon = 0.0;
    double pct = 0.0;
    int sign_ok = 0;
    Trend realized = Trend::sideways;
    double p_true = 0.0;
    double w_hit = 0.0;
    bool operator==(const ForecastLabel&) const = default;
};

/// Per-action arrays are indexed by ActionKind (buy, hold, sell).
struct DecisionLabel {
    std::array<double, 3> r_eq{};
    std::array<double, 3> c{};
    std::array<double, 3> reward{};
    double r_bm = 0.0;
    ActionKind taken = ActionKind::hold;
    double taken_reward = 0.0;
    bool operator==(const DecisionLabel&) const = default;
};

constexpr std::size_t action_index(ActionKind kind) { return static_cast<std::size_t>(kind); }

/// eps = max(alpha * mean |log return| over the 20 returns ending at `at`, epsilon_min).
double epsilon_band(const PriceSeries& series, Date at, const BandConfig& cfg = {});
double epsilon_band(std::span<const double> closes, const BandConfig& cfg = {});

/// p1 / p0 - 1; throws std::invalid_argument for non-positive p0.
double realized_pct(double p0, double p1);

/// up iff pct > eps, down iff pct < -eps, otherwise sideways.
Trend realized_label(double pct, double epsilon);
int label_direction(Trend predicted, double pct, double epsilon);

/// sign_ok * tanh(|pct| / eps) * p_true.
double weighted_hit(int sign_ok, double pct, double epsilon, double p_true);

struct CounterfactualEquities {
    double e_prev = 0.0;
    std::array<double, 3> equity{};
    std::array<double, 3> commission{};
};

/// Executes each action on a copy of `account` at `price_exec` and marks it to `price_next`.
CounterfactualEquities counterfactual_equities(const AccountState& account, TradingStyle style,
                                               double price_exec, double price_next,
                                               double commission_rate);

/// (E_a - E_prev) / E_prev - beta * r_bm - gamma * commission_a / E_prev.
double action_reward(double e_prev, double e_a, double r_bm, double commission_a,
                     const RewardConfig& cfg = {});

struct DayLabelInput {
    const PriceSeries* series = nullptr;
    Date day;
    Date next;
    AccountState account;  // before the day's trade
    TradingStyle style = TradingStyle::balanced;
    ActionKind taken = ActionKind::hold;
    TrendProbabilities probs;
    Trend predicted = Trend::sideways;
    double commission_rate = 0.0;
};

struct DayLabels {
    ForecastLabel forecast;
    DecisionLabel decision;
};

/// Labels day `day` against the close of `next`: forecast by the band, decision by
/// counterfactual execution at close(day) marked at close(next).
DayLabels label_day(const DayLabelInput& in, const BandConfig& band = {},
                    const RewardConfig& reward = {});

struct AccountSnapshot {
    double cash = 0.0;
    double shares = 0.0;
    double equity = 0.0;
    TradingStyle style = TradingStyle::balanced;
    bool operator==(const AccountSnapshot&) const = default;
};

struct TrajectoryLabels {
    std::optional<ForecastLabel> forecast;
    std::optional<DecisionLabel> decision;
    bool operator==(const TrajectoryLabels&) const = default;
};

struct TrajectoryRecord {
    Date date;
    std::string symbol;
    std::string agent_name;
    std::string prompt_digest;
    std::string input_text;
    std::string output_text;
    std::string reasoning_trace;
    AccountSnapshot account_snapshot;
    std::optional<TrajectoryLabels> labels;  // empty until the next close is known
    bool operator==(const TrajectoryRecord&) const = default;
};

enum class SftSource { forecast, decision };
std::string_view to_string(SftSource source);

struct SftSample {
    std::string instruction;
    std::string response;
    double score = 0.0;
    SftSource source = SftSource::decision;
    bool operator==(const SftSample&) const = default;
};

struct SftFilter {
    double whit_min = 0.3;
    double min_reward = 0.0;  // strict: taken_reward > min_reward
};

/// `<think>` block holding the trace (when present) followed by the output.
std::string sft_response(const TrajectoryRecord& record);

/// Decision records with taken_reward > min_reward and forecast records with
/// w_hit >= whit_min; unlabeled records never qualify.
std::vector<SftSample> filter_sft(std::span<const TrajectoryRecord> records, const SftFilter& filter = {});

nlohmann::ordered_json to_json(const ForecastLabel& label);
nlohmann::ordered_json to_json(const DecisionLabel& label);
nlohmann::ordered_json to_json(const TrajectoryRecord& record);
nlohmann::ordered_json to_json(const SftSample& sample);
TrajectoryRecord trajectory_from_json(const nlohmann::json& j);
SftSample sft_from_json(const nlohmann::json& j);

/// One JSON object per line. Throws DataError on I/O failure.
void emit_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& path);
void emit_sft(std::span<const SftSample> samples, const std::filesystem::path& path);
/// Throws DataError on unreadable files or malformed lines.
std::vector<TrajectoryRecord> read_trajectories(const std::filesystem::path& path);
std::vector<SftSample> read_sft(const std::filesystem::path& path);

}  // namespace agentbt
