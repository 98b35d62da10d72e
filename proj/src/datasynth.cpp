#include "agentbt/datasynth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace agentbt {

using nlohmann::json;
using nlohmann::ordered_json;

void BandConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("band.alpha must be positive");
    if (!(epsilon_min > 0.0)) throw ConfigError("band.epsilon_min must be positive");
}

void RewardConfig::validate() const {
    if (!(beta >= 0.0)) throw ConfigError("reward.beta must be non-negative");
    if (!(gamma >= 0.0)) throw ConfigError("reward.gamma must be non-negative");
}

double epsilon_band(std::span<const double> closes, const BandConfig& cfg) {
    const auto returns = indicators::trailing_log_returns(closes, 20);
    double sum = 0.0;
    for (double r : returns) sum += std::abs(r);
    return std::max(cfg.alpha * (sum / 20.0), cfg.epsilon_min);
}

double epsilon_band(const PriceSeries& series, Date at, const BandConfig& cfg) {
    return epsilon_band(series.closes_through(at), cfg);
}

double realized_pct(double p0, double p1) {
    if (!(p0 > 0.0)) throw std::invalid_argument("realized_pct: p0 must be positive");
    return p1 / p0 - 1.0;
}

Trend realized_label(double pct, double epsilon) {
    if (pct > epsilon) return Trend::up;
    if (pct < -epsilon) return Trend::down;
    return Trend::sideways;
}

int label_direction(Trend predicted, double pct, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("label_direction: epsilon must be positive");
    return predicted == realized_label(pct, epsilon) ? 1 : 0;
}

double weighted_hit(int sign_ok, double pct, double epsilon, double p_true) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("weighted_hit: epsilon must be positive");
    if (!(p_true >= 0.0 && p_true <= 1.0)) throw std::invalid_argument("weighted_hit: p_true outside [0,1]");
    if (sign_ok == 0) return 0.0;
    return std::tanh(std::abs(pct) / epsilon) * p_true;
}

CounterfactualEquities counterfactual_equities(const AccountState& account, TradingStyle style,
                                               double price_exec, double price_next,
                                               double commission_rate) {
    if (!(price_exec > 0.0) || !(price_next > 0.0)) {
        throw std::invalid_argument("counterfactual_equities: prices must be positive");
    }
    CounterfactualEquities out;
    out.e_prev = account.cash + account.shares * price_exec;
    for (auto kind : {ActionKind::buy, ActionKind::hold, ActionKind::sell}) {
        auto exec = apply_action(account, {kind, style, TradeOrigin::agent}, price_exec, commission_rate);
        mark_to_market(exec.state, price_next);
        out.equity[action_index(kind)] = exec.state.equity;
        out.commission[action_index(kind)] = exec.record.commission;
    }
    return out;
}

double action_reward(double e_prev, double e_a, double r_bm, double commission_a, const RewardConfig& cfg) {
    if (!(e_prev > 0.0)) throw std::invalid_argument("action_reward: E_prev must be positive");
    const double r_eq = (e_a - e_prev) / e_prev;
    const double c = commission_a / e_prev;
    return r_eq - cfg.beta * r_bm - cfg.gamma * c;
}

DayLabels label_day(const DayLabelInput& in, const BandConfig& band, const RewardConfig& reward) {
    if (in.series == nullptr) throw std::invalid_argument("label_day: no price series");
    const auto i0 = in.series->index_of(in.day);
    const auto i1 = in.series->index_of(in.next);
    if (i1 <= i0) throw std::invalid_argument("label_day: next day must follow the labeled day");
    const double p0 = (*in.series)[i0].close;
    const double p1 = (*in.series)[i1].close;

    DayLabels out;
    auto& f = out.forecast;
    f.epsilon = epsilon_band(*in.series, in.day, band);
    f.pct = realized_pct(p0, p1);
    f.realized = realized_label(f.pct, f.epsilon);
    f.sign_ok = label_direction(in.predicted, f.pct, f.epsilon);
    f.p_true = std::clamp(in.probs.of(f.realized), 0.0, 1.0);
    f.w_hit = weighted_hit(f.sign_ok, f.pct, f.epsilon, f.p_true);

    auto& d = out.decision;
    const auto cf = counterfactual_equities(in.account, in.style, p0, p1, in.commission_rate);
    d.r_bm = f.pct;
    for (std::size_t a = 0; a < 3; ++a) {
        d.r_eq[a] = (cf.equity[a] - cf.e_prev) / cf.e_prev;
        d.c[a] = cf.commission[a] / cf.e_prev;
        d.reward[a] = action_reward(cf.e_prev, cf.equity[a], d.r_bm, cf.commission[a], reward);
    }
    d.taken = in.taken;
    d.taken_reward = d.reward[action_index(in.taken)];
    return out;
}

std::string_view to_string(SftSource source) {
    return source == SftSource::forecast ? "forecast" : "decision";
}

std::string sft_response(const TrajectoryRecord& record) {
    if (record.reasoning_trace.empty()) return record.output_text;
    return "<think>\n" + record.reasoning_trace + "\n</think>\n" + record.output_text;
}

std::vector<SftSample> filter_sft(std::span<const TrajectoryRecord> records, const SftFilter& filter) {
    std::vector<SftSample> out;
    for (const auto& r : records) {
        if (!r.labels) continue;
        if (r.agent_name == "forecast" && r.labels->forecast && r.labels->forecast->w_hit >= filter.whit_min) {
            out.push_back({r.input_text, sft_response(r), r.labels->forecast->w_hit, SftSource::forecast});
        } else if (r.agent_name == "decision" && r.labels->decision &&
                   r.labels->decision->taken_reward > filter.min_reward) {
            out.push_back({r.input_text, sft_response(r), r.labels->decision->taken_reward, SftSource::decision});
        }
    }
    return out;
}

namespace {

ordered_json per_action(const std::array<double, 3>& v) {
    return {{"buy", v[0]}, {"hold", v[1]}, {"sell", v[2]}};
}

std::array<double, 3> per_action_from(const json& j) {
    return {j.at("buy").get<double>(), j.at("hold").get<double>(), j.at("sell").get<double>()};
}

ForecastLabel forecast_label_from(const json& j) {
    ForecastLabel f;
    f.epsilon = j.at("epsilon").get<double>();
    f.pct = j.at("pct").get<double>();
    f.sign_ok = j.at("sign_ok").get<int>();
    f.realized = parse_trend(j.at("realized").get<std::string>());
    f.p_true = j.at("p_true").get<double>();
    f.w_hit = j.at("w_hit").get<double>();
    return f;
}

DecisionLabel decision_label_from(const json& j) {
    DecisionLabel d;
    d.r_eq = per_action_from(j.at("r_eq"));
    d.c = per_action_from(j.at("c"));
    d.reward = per_action_from(j.at("reward"));
    d.r_bm = j.at("r_bm").get<double>();
    d.taken = parse_action(j.at("taken").get<std::string>());
    d.taken_reward = j.at("taken_reward").get<double>();
    return d;
}

template <class T, class Reader>
std::vector<T> read_jsonl(const std::filesystem::path& path, Reader read) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(read(json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <class T>
void write_jsonl(std::span<const T> items, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& item : items) out << to_json(item).dump() << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

ordered_json to_json(const ForecastLabel& f) {
    return {{"epsilon", f.epsilon}, {"pct", f.pct},       {"sign_ok", f.sign_ok},
            {"realized", std::string(to_string(f.realized))}, {"p_true", f.p_true}, {"w_hit", f.w_hit}};
}

ordered_json to_json(const DecisionLabel& d) {
    return {{"r_eq", per_action(d.r_eq)},
            {"c", per_action(d.c)},
            {"reward", per_action(d.reward)},
            {"r_bm", d.r_bm},
            {"taken", std::string(to_string(d.taken))},
            {"taken_reward", d.taken_reward}};
}

ordered_json to_json(const TrajectoryRecord& r) {
    ordered_json j;
    j["date"] = r.date.iso();
    j["symbol"] = r.symbol;
    j["agent_name"] = r.agent_name;
    j["prompt_digest"] = r.prompt_digest;
    j["input_text"] = r.input_text;
    j["output_text"] = r.output_text;
    j["reasoning_trace"] = r.reasoning_trace;
    j["account_snapshot"] = {{"cash", r.account_snapshot.cash},
                             {"shares", r.account_snapshot.shares},
                             {"equity", r.account_snapshot.equity},
                             {"style", std::string(to_string(r.account_snapshot.style))}};
    if (r.labels) {
        ordered_json labels = ordered_json::object();
        if (r.labels->forecast) labels["forecast"] = to_json(*r.labels->forecast);
        if (r.labels->decision) labels["decision"] = to_json(*r.labels->decision);
        j["labels"] = labels;
    } else {
        j["labels"] = nullptr;
    }
    return j;
}

ordered_json to_json(const SftSample& s) {
    return {{"instruction", s.instruction},
            {"response", s.response},
            {"score", s.score},
            {"source", std::string(to_string(s.source))}};
}

TrajectoryRecord trajectory_from_json(const json& j) {
    TrajectoryRecord r;
    r.date = Date::parse(j.at("date").get<std::string>());
    r.symbol = j.at("symbol").get<std::string>();
    r.agent_name = j.at("agent_name").get<std::string>();
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.input_text = j.at("input_text").get<std::string>();
    r.output_text = j.at("output_text").get<std::string>();
    r.reasoning_trace = j.at("reasoning_trace").get<std::string>();
    const auto& acct = j.at("account_snapshot");
    r.account_snapshot.cash = acct.at("cash").get<double>();
    r.account_snapshot.shares = acct.at("shares").get<double>();
    r.account_snapshot.equity = acct.at("equity").get<double>();
    r.account_snapshot.style = parse_style(acct.at("style").get<std::string>());
    const auto& labels = j.at("labels");
    if (!labels.is_null()) {
        TrajectoryLabels l;
        if (labels.contains("forecast")) l.forecast = forecast_label_from(labels.at("forecast"));
        if (labels.contains("decision")) l.decision = decision_label_from(labels.at("decision"));
        r.labels = l;
    }
    return r;
}

SftSample sft_from_json(const json& j) {
    SftSample s;
    s.instruction = j.at("instruction").get<std::string>();
    s.response = j.at("response").get<std::string>();
    s.score = j.at("score").get<double>();
    const auto source = j.at("source").get<std::string>();
    if (source == "forecast") s.source = SftSource::forecast;
    else if (source == "decision") s.source = SftSource::decision;
    else throw DataError("unknown sft source '" + source + "'");
    return s;
}

void emit_trajectories(std::span<const TrajectoryRecord> records, const std::filesystem::path& path) {
    write_jsonl(records, path);
}

void emit_sft(std::span<const SftSample> samples, const std::filesystem::path& path) {
    write_jsonl(samples, path);
}

std::vector<TrajectoryRecord> read_trajectories(const std::filesystem::path& path) {
    return read_jsonl<TrajectoryRecord>(path, trajectory_from_json);
}

std::vector<SftSample> read_sft(const std::filesystem::path& path) {
    return read_jsonl<SftSample>(path, sft_from_json);
}

}  // namespace agentbt
