#include "agentbt/backtest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "agentbt/agents.h"

namespace agentbt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kMaxGapDays = 10;
constexpr std::size_t kWarmupCloses = 21;

std::string pct_text(double fraction) { return format_fixed(100.0 * fraction, 2) + "%"; }

AccountSnapshot snapshot_of(const AccountState& a, TradingStyle style) {
    return {a.cash, a.shares, a.equity, style};
}

TrajectoryRecord record_of(const AgentTranscript& t, const AgentEnv& env, const AccountSnapshot& acct) {
    TrajectoryRecord r;
    r.date = env.date;
    r.symbol = env.symbol;
    r.agent_name = t.agent;
    r.prompt_digest = t.prompt_digest;
    r.input_text = t.input_text;
    r.output_text = t.output_text;
    r.reasoning_trace = t.reasoning_trace;
    r.account_snapshot = acct;
    return r;
}

// Everything needed to label a day once the next close is known.
struct PendingDay {
    Date date;
    AccountState account;
    TradingStyle style = TradingStyle::balanced;
    ActionKind taken = ActionKind::hold;
    Forecast forecast;
    std::size_t first_record = 0;
    std::size_t record_count = 0;
};

struct Histories {
    std::vector<ReflectionEntry> forecast, style, decision;
};

void label_pending(const PendingDay& p, Date next, const BacktestConfig& cfg, const PriceSeries& prices,
                   std::vector<TrajectoryRecord>& records, Histories& hist) {
    DayLabelInput in;
    in.series = &prices;
    in.day = p.date;
    in.next = next;
    in.account = p.account;
    in.style = p.style;
    in.taken = p.taken;
    in.probs = p.forecast.probs;
    in.predicted = p.forecast.gated.label;
    in.commission_rate = cfg.commission_rate;
    const auto labels = label_day(in, cfg.band, cfg.reward);

    for (std::size_t i = p.first_record; i < p.first_record + p.record_count; ++i) {
        auto& rec = records[i];
        TrajectoryLabels l;
        if (rec.agent_name == "forecast") l.forecast = labels.forecast;
        if (rec.agent_name == "decision" || rec.agent_name == "style") l.decision = labels.decision;
        rec.labels = l;
    }

    const auto& f = labels.forecast;
    hist.forecast.push_back(
        {p.date, f.sign_ok ? f.w_hit : -std::abs(f.pct),
         "predicted " + std::string(to_string(p.forecast.gated.label)) + " via " +
             std::string(to_string(p.forecast.gated.path)) + ", realized " +
             std::string(to_string(f.realized)) + " (" + pct_text(f.pct) + ")"});
    const auto& d = labels.decision;
    const double r_eq = d.r_eq[action_index(d.taken)];
    hist.style.push_back({p.date, r_eq,
                          std::string(to_string(p.style)) + " style with " + std::string(to_string(d.taken)) +
                              ": equity " + pct_text(r_eq) + " vs benchmark " + pct_text(d.r_bm)});
    hist.decision.push_back({p.date, d.taken_reward,
                             std::string(to_string(d.taken)) + " on a " +
                                 std::string(to_string(p.forecast.gated.label)) + " forecast: reward " +
                                 format_fixed(d.taken_reward, 4) + ", market " + pct_text(d.r_bm)});
}

// Trading-day indices of the configured range, after checking coverage.
std::pair<std::size_t, std::size_t> trading_range(const BacktestConfig& cfg, const PriceSeries& prices) {
    const auto bars = prices.bars();
    auto first = std::lower_bound(bars.begin(), bars.end(), cfg.start,
                                  [](const PriceBar& b, Date d) { return b.date < d; });
    auto last = std::upper_bound(bars.begin(), bars.end(), cfg.end,
                                 [](Date d, const PriceBar& b) { return d < b.date; });
    if (first == last) {
        throw DataError("no prices between " + cfg.start.iso() + " and " + cfg.end.iso());
    }
    const auto begin = static_cast<std::size_t>(first - bars.begin());
    const auto end = static_cast<std::size_t>(last - bars.begin());
    if (begin < kWarmupCloses) {
        throw InsufficientHistory("first trading day " + bars[begin].date.iso() + " has " +
                                  std::to_string(begin) + " earlier closes; " +
                                  std::to_string(kWarmupCloses) + " are required for warm-up");
    }
    for (std::size_t i = begin; i < end; ++i) {
        const auto gap = bars[i].date.serial() - bars[i - 1].date.serial();
        if (gap > kMaxGapDays) {
            throw DataError("missing prices: " + std::to_string(gap) + "-day gap before " + bars[i].date.iso());
        }
    }
    return {begin, end};
}

std::string text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
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

int count_trades(const std::vector<TradeRecord>& trades) {
    return static_cast<int>(std::count_if(trades.begin(), trades.end(), [](const TradeRecord& t) {
        return t.action.kind != ActionKind::hold;
    }));
}

}  // namespace

MarketData load_market_data(const DataPaths& paths) {
    MarketData data{load_price_csv(paths.prices), {}, {}};
    if (paths.news) data.news = load_news_jsonl(*paths.news);
    if (paths.reports) data.reports = ReportLibrary::load(*paths.reports);
    return data;
}

BacktestResult simulate(const BacktestConfig& cfg, const MarketData& data) {
    cfg.validate();
    const auto& prices = data.prices;
    const auto [begin, end] = trading_range(cfg, prices);

    std::optional<PromptLibrary> custom_prompts;
    if (!cfg.prompts_dir.empty()) {
        custom_prompts = PromptLibrary::from_directory(cfg.prompts_dir.is_relative() ? cfg.base_dir / cfg.prompts_dir
                                                                                      : cfg.prompts_dir);
    }
    const PromptLibrary& prompts = custom_prompts ? *custom_prompts : PromptLibrary::builtin();

    AgentEnv env;
    env.symbol = cfg.symbol;
    env.providers = make_providers(cfg.provider, cfg.base_dir);
    env.prompts = &prompts;
    env.params = {cfg.provider.temperature, cfg.seed, cfg.provider.max_tokens};
    env.retrieval = cfg.retrieval;
    env.gate = cfg.gate;
    env.rerank_embedding = cfg.flags.rerank_embedding;
    if (!cfg.keywords_file.empty()) {
        env.keywords = load_keyword_table(cfg.keywords_file.is_relative() ? cfg.base_dir / cfg.keywords_file
                                                                           : cfg.keywords_file);
    }

    BacktestResult result;
    result.first_day = prices[begin].date;
    AccountState account = AccountState::all_cash(cfg.initial_cash);
    result.equity.push_back({prices[begin - 1].date, cfg.initial_cash});

    ReportCache report_cache;
    Histories hist;
    std::optional<PendingDay> pending;
    StylePreference style;  // balanced until the style agent says otherwise
    const auto disabled = prompts.render("notice.reflection_disabled", {});

    for (std::size_t i = begin; i < end; ++i) {
        const Date day = prices[i].date;
        const Date prev_day = prices[i - 1].date;
        const double close = prices[i].close;
        if (pending) {
            label_pending(*pending, day, cfg, prices, result.trajectories, hist);
            pending.reset();
        }
        // Everything below sees only bars dated on or before `day`.
        const auto view = prices.truncated(day);
        const auto snap = build_snapshot(view, day);
        mark_to_market(account, close);

        RiskVerdict verdict;
        if (cfg.risk.enabled && account.shares > 0.0) {
            const auto held = compute_thresholds(style.style, view, day, cfg.risk);
            verdict = evaluate_position(unrealized_pnl_pct(account, close), held);
        }

        env.date = day;
        auto reflect = [&](const std::vector<ReflectionEntry>& h, ReflectionAudience who) {
            if (!cfg.flags.self_reflection) return disabled;
            return build_reflection(h, cfg.reflection_window, who, prompts).text;
        };

        const auto news_begin = std::upper_bound(data.news.begin(), data.news.end(), prev_day,
                                                 [](Date d, const NewsItem& n) { return d < n.date; });
        const auto news_end = std::upper_bound(data.news.begin(), data.news.end(), day,
                                               [](Date d, const NewsItem& n) { return d < n.date; });
        auto news = run_news_agent(env, std::span<const NewsItem>(news_begin, news_end));
        auto report = run_report_agent(env, data.reports, report_cache);
        auto forecast = run_forecast_agent(env, snap, close, news.value, report.value,
                                           reflect(hist.forecast, ReflectionAudience::forecasting));

        std::optional<AgentResult<StylePreference>> style_result;
        if (cfg.flags.style_and_state) {
            StyleInputs si{&account, &forecast.value, &news.value, &report.value, style};
            style_result = run_style_agent(env, si, reflect(hist.style, ReflectionAudience::style));
            style = style_result->value;
        } else {
            style = StylePreference{};
        }

        DecisionInputs di;
        di.close = close;
        di.forecast = &forecast.value;
        di.sentiment = &news.value;
        di.finance = &report.value;
        di.style = &style;
        di.account = cfg.flags.style_and_state ? &account : nullptr;
        di.thresholds = compute_thresholds(style.style, view, day, cfg.risk);
        auto decision = run_decision_agent(env, di, reflect(hist.decision, ReflectionAudience::decision));

        const auto acct = snapshot_of(account, style.style);
        PendingDay p{day, account, style.style, decision.value.action, forecast.value,
                     result.trajectories.size(), 0};
        for (const auto* t : {&news.transcript, &report.transcript, &forecast.transcript}) {
            result.trajectories.push_back(record_of(*t, env, acct));
            result.flagged_calls += t->flagged ? 1 : 0;
        }
        if (style_result) {
            result.trajectories.push_back(record_of(style_result->transcript, env, acct));
            result.flagged_calls += style_result->transcript.flagged ? 1 : 0;
        }
        result.trajectories.push_back(record_of(decision.transcript, env, acct));
        result.flagged_calls += decision.transcript.flagged ? 1 : 0;
        p.record_count = result.trajectories.size() - p.first_record;
        pending = std::move(p);

        TradeAction action{decision.value.action, style.style, TradeOrigin::agent};
        if (verdict.action == RiskAction::forced_sell) action = {ActionKind::sell, style.style, TradeOrigin::forced_sell};
        if (verdict.action == RiskAction::take_profit) action = {ActionKind::sell, style.style, TradeOrigin::take_profit};
        auto exec = apply_action(account, action, close, cfg.commission_rate, day);
        account = exec.state;
        result.trades.push_back(std::move(exec.record));
        result.equity.push_back({day, account.equity});
    }

    std::vector<double> curve;
    curve.reserve(result.equity.size());
    for (const auto& e : result.equity) curve.push_back(e.equity);
    result.metrics = compute_metrics(curve, count_trades(result.trades));
    result.sft = filter_sft(result.trajectories, cfg.sft);
    return result;
}

ordered_json to_json(const TradeRecord& t) {
    return {{"date", t.date.iso()},
            {"action", std::string(to_string(t.action.kind))},
            {"style", std::string(to_string(t.action.style))},
            {"origin", std::string(to_string(t.action.origin))},
            {"fill_price", t.fill_price},
            {"quantity", t.quantity},
            {"commission", t.commission},
            {"post_equity", t.post_equity},
            {"note", t.note}};
}

TradeRecord trade_from_json(const json& j) {
    TradeRecord t;
    t.date = Date::parse(j.at("date").get<std::string>());
    t.action.kind = parse_action(j.at("action").get<std::string>());
    t.action.style = parse_style(j.at("style").get<std::string>());
    t.action.origin = parse_origin(j.at("origin").get<std::string>());
    t.fill_price = j.at("fill_price").get<double>();
    t.quantity = j.at("quantity").get<double>();
    t.commission = j.at("commission").get<double>();
    t.post_equity = j.at("post_equity").get<double>();
    t.note = j.at("note").get<std::string>();
    return t;
}

ordered_json to_json(const MetricsReport& m) {
    return {{"cr_pct", m.cr_pct},     {"sharpe", m.sharpe},     {"mdd_pct", m.mdd_pct},
            {"av_pct", m.av_pct},     {"n_trades", m.n_trades}, {"degenerate_sharpe", m.degenerate_sharpe}};
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    m.cr_pct = j.at("cr_pct").get<double>();
    m.sharpe = j.at("sharpe").get<double>();
    m.mdd_pct = j.at("mdd_pct").get<double>();
    m.av_pct = j.at("av_pct").get<double>();
    m.n_trades = j.at("n_trades").get<int>();
    m.degenerate_sharpe = j.at("degenerate_sharpe").get<bool>();
    return m;
}

void write_artifacts(const BacktestConfig& cfg, const BacktestResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create run directory " + dir.string() + ": " + ec.message());

    write_text(dir / "config.ini", cfg.source_text);

    std::string trades, equity;
    for (const auto& t : result.trades) trades += to_json(t).dump() + "\n";
    for (const auto& e : result.equity) {
        equity += ordered_json{{"date", e.date.iso()}, {"equity", e.equity}}.dump() + "\n";
    }
    write_text(dir / "trades.jsonl", trades);
    write_text(dir / "equity.jsonl", equity);
    emit_trajectories(result.trajectories, dir / "trajectories.jsonl");
    emit_sft(result.sft, dir / "sft.jsonl");
    write_text(dir / "metrics.json", to_json(result.metrics).dump(2) + "\n");

    ordered_json run;
    run["symbol"] = cfg.symbol;
    run["start"] = cfg.start.iso();
    run["end"] = cfg.end.iso();
    run["first_trading_day"] = result.first_day.iso();
    run["trading_days"] = result.trades.size();
    run["seed"] = cfg.seed;
    run["chat_provider"] = cfg.provider.chat;
    run["flags"] = {{"risk_management", cfg.risk.enabled},
                    {"self_reflection", cfg.flags.self_reflection},
                    {"rerank_embedding", cfg.flags.rerank_embedding},
                    {"style_and_state", cfg.flags.style_and_state}};
    run["flagged_agent_calls"] = result.flagged_calls;
    run["conventions"] = {{"returns", "daily simple returns of the equity curve"},
                          {"volatility", "sample standard deviation, annualized by sqrt(252)"},
                          {"risk_free_rate", 0.0},
                          {"execution", "same-day close"},
                          {"equity_curve", "initial cash on the last warm-up day, then post-trade equity per day"}};
    write_text(dir / "run.json", run.dump(2) + "\n");
}

BacktestResult run_backtest(const BacktestConfig& cfg, const DataPaths& paths, const std::filesystem::path& out_dir) {
    const auto data = load_market_data(paths);
    auto result = simulate(cfg, data);
    write_artifacts(cfg, result, out_dir);
    return result;
}

MetricsReport read_metrics(const std::filesystem::path& run_dir) {
    const auto path = run_dir / "metrics.json";
    try {
        return metrics_from_json(json::parse(text_file(path)));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<TradeRecord> read_trades(const std::filesystem::path& path) {
    return read_jsonl<TradeRecord>(path, trade_from_json);
}

std::vector<EquityPoint> read_equity(const std::filesystem::path& path) {
    return read_jsonl<EquityPoint>(path, [](const json& j) {
        return EquityPoint{Date::parse(j.at("date").get<std::string>()), j.at("equity").get<double>()};
    });
}

ReplayMismatch::ReplayMismatch(std::string field, double stored, double recomputed)
    : DataError("replay mismatch in " + field + ": stored " + format_fixed(stored, 12) + ", recomputed " +
                format_fixed(recomputed, 12)),
      field_(std::move(field)) {}

MetricsReport replay(const std::filesystem::path& run_dir) {
    const auto stored = read_metrics(run_dir);
    const auto trades = read_trades(run_dir / "trades.jsonl");
    const auto equity = read_equity(run_dir / "equity.jsonl");
    if (equity.size() != trades.size() + 1) {
        throw DataError("equity.jsonl has " + std::to_string(equity.size()) + " rows; trades.jsonl implies " +
                        std::to_string(trades.size() + 1));
    }
    std::vector<double> curve;
    for (const auto& e : equity) curve.push_back(e.equity);
    MetricsReport again;
    try {
        again = compute_metrics(curve, count_trades(trades));
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("equity.jsonl: ") + e.what());
    }
    auto check = [](const char* field, double a, double b) {
        if (!(a == b)) throw ReplayMismatch(field, a, b);
    };
    check("cr_pct", stored.cr_pct, again.cr_pct);
    check("sharpe", stored.sharpe, again.sharpe);
    check("mdd_pct", stored.mdd_pct, again.mdd_pct);
    check("av_pct", stored.av_pct, again.av_pct);
    check("n_trades", stored.n_trades, again.n_trades);
    check("degenerate_sharpe", stored.degenerate_sharpe, again.degenerate_sharpe);
    return again;
}

}  // namespace agentbt
