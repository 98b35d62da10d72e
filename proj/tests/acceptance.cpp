// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero on any failure.
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "agentbt/backtest.h"
#include "agentbt/config.h"
#include "agentbt/datasynth.h"
#include "agentbt/gate.h"
#include "agentbt/marketdata.h"
#include "agentbt/portfolio.h"
#include "agentbt/prompts.h"
#include "agentbt/risk.h"
#include "support/fixtures.h"
#include "support/oracles.h"

using namespace agentbt;
using nlohmann::json;

namespace {

struct Check {
    bool ok = true;
    std::string detail;
    int failures = 0;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        if (failures++ < 3) detail += (detail.empty() ? "" : "; ") + what;
        ok = false;
    }
};

int report(int id, const std::string& name, const std::function<Check()>& body) {
    Check c;
    try {
        c = body();
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("exception: ") + e.what();
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << " [" << id << "] " << name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << std::endl;
    return c.ok ? 0 : 1;
}

BacktestConfig config_for(const std::vector<PriceBar>& bars, const std::string& chat, const std::string& extra = "",
                          double commission = 0.001) {
    return parse_config(fixture::config_text(bars[21].date.iso(), bars.back().date.iso(), chat, extra, commission), {});
}

MarketData prices_only(const std::vector<double>& closes) {
    return MarketData{fixture::series(closes), {}, {}};
}

std::vector<int> chunk_ordinals(const std::string& text) {
    std::vector<int> out;
    for (auto pos = text.find("[chunk "); pos != std::string::npos; pos = text.find("[chunk ", pos + 1)) {
        out.push_back(std::stoi(text.substr(pos + 7)));
    }
    return out;
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

// 21 warm-up closes, then a drifting geometric path.
std::vector<double> drifting_path(std::mt19937_64& rng, std::size_t trading_days, double drift, double sigma) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> closes{100.0};
    for (std::size_t i = 1; i < 21; ++i) closes.push_back(closes.back() * std::exp(sigma * z(rng)));
    while (closes.size() < 21 + trading_days) closes.push_back(closes.back() * std::exp(drift + sigma * z(rng)));
    return closes;
}

Check indicator_oracles() {
    Check c;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> vol(0.002, 0.06);
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 1000; ++k) {
        const auto closes = fixture::random_walk(rng, 60, vol(rng), 10.0 + k);
        const auto s = fixture::series(closes);
        const Date d = s[59].date;
        const auto tag = "series " + std::to_string(k);
        c.expect(oracle::close(rsi14(s, d), oracle::rsi14(closes), 1e-9), tag + " rsi14");
        c.expect(oracle::close(hv10_pct(s, d), oracle::hv10_pct(closes), 1e-9), tag + " hv10");
        c.expect(oracle::close(atr20s_pct(s, d), oracle::atr20s_pct(closes), 1e-9), tag + " atr20s");
        c.expect(oracle::close(sigma_d10(s, d), oracle::sigma_d10(closes), 1e-9), tag + " sigma_d10");
        c.expect(oracle::close(dist_sma20_pct(s, d), oracle::dist_sma20_pct(closes), 1e-9), tag + " sma20");
        c.expect(oracle::close(dist_extreme20_pct(s, d, Side::high), oracle::dist_high20_pct(closes), 1e-9),
                 tag + " high20");
        c.expect(oracle::close(dist_extreme20_pct(s, d, Side::low), oracle::dist_low20_pct(closes), 1e-9),
                 tag + " low20");
        c.expect(extreme_flag20(s, d, Side::high) == oracle::new_high20(closes), tag + " new_high20");
        c.expect(extreme_flag20(s, d, Side::low) == oracle::new_low20(closes), tag + " new_low20");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
    if (c.ok) c.detail = "1000 series in " + format_fixed(secs, 3) + " s";
    return c;
}

Check atr_literal() {
    Check c;
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto closes = fixture::random_walk(rng, 60, 0.03);
        const double a = indicators::atr20s_pct(closes);
        const double b = oracle::atr20s_pct(closes);
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
        c.expect(a == b || oracle::close(a, b, 1e-12), "series " + std::to_string(k));
    }
    if (c.ok) c.detail = "max deviation " + std::to_string(worst);
    return c;
}

Check gate_dominance() {
    Check c;
    IndicatorSnapshot snap;
    snap.rsi14 = 82.0;
    snap.dist_high20_pct = -6.0;
    snap.dist_sma20_pct = 4.0;
    snap.dist_low20_pct = 12.0;
    snap.atr20s_pct = 2.4;  // threshold 1.2
    std::mt19937_64 rng(303);
    std::gamma_distribution<double> g(0.5, 1.0);
    int hard = 0;
    for (int k = 0; k < 10000; ++k) {
        const double a = g(rng), b = g(rng), s = g(rng);
        const double total = a + b + s;
        TrendProbabilities p{a / total, b / total, 0.0};
        p.p_side = std::max(0.0, 1.0 - p.p_up - p.p_down);
        const auto label = classify_trend(p, snap);
        const bool ok = label.label == Trend::sideways && label.path == GatePath::hard_intercept;
        hard += ok;
        c.expect(ok, "vector " + std::to_string(k));
    }
    c.detail = std::to_string(hard) + "/10000 hard_intercept";
    return c;
}

Check risk_first_crossing() {
    Check c;
    std::mt19937_64 rng(404);
    const RiskConfig defaults;
    const double m_sl = defaults.for_style(TradingStyle::balanced).m_sl;
    int crossed = 0;
    for (int path = 0; path < 200; ++path) {
        const auto closes = drifting_path(rng, 40, -0.006, 0.015);
        const auto bars = fixture::bars(closes);
        const auto cfg = config_for(bars, "stub:always-up", "[risk]\nbalanced_tp = 1000\n", 0.0);
        const auto r = simulate(cfg, prices_only(closes));

        // independent expectation: entry at the first trading close, bands from the oracle sigma
        const double entry = closes[21];
        std::optional<std::size_t> expected;
        for (std::size_t i = 22; i < closes.size() && !expected; ++i) {
            const std::vector<double> seen(closes.begin(), closes.begin() + i + 1);
            const double t_sl = std::max(m_sl * oracle::sigma_d10(seen), defaults.floor);
            if (closes[i] / entry - 1.0 <= -t_sl) expected = i;
        }
        std::optional<std::size_t> actual;
        for (std::size_t t = 0; t < r.trades.size() && !actual; ++t) {
            c.expect(r.trades[t].action.origin != TradeOrigin::take_profit, "take profit fired");
            if (r.trades[t].action.origin == TradeOrigin::forced_sell) actual = 21 + t;
        }
        const auto tag = "path " + std::to_string(path);
        c.expect(r.trades[0].action.kind == ActionKind::buy, tag + " did not enter");
        c.expect(expected == actual, tag + " expected day " + (expected ? std::to_string(*expected) : "none") +
                                         ", got " + (actual ? std::to_string(*actual) : "none"));
        crossed += expected.has_value();
    }
    c.expect(crossed >= 100, "only " + std::to_string(crossed) + " paths crossed");
    if (c.ok) c.detail = std::to_string(crossed) + "/200 paths crossed";
    return c;
}

Check reward_identities() {
    Check c;
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> price(5.0, 500.0), move(-0.1, 0.1), cash(1000.0, 1e6), shares(0.0, 500.0);
    const RewardConfig reward;
    for (int k = 0; k < 2000; ++k) {
        const double p0 = price(rng);
        AccountState acct = AccountState::all_cash(cash(rng));
        if (k % 2) {
            acct.shares = shares(rng);
            acct.avg_entry = price(rng);
        }
        mark_to_market(acct, p0);
        // hold on a flat day with zero commission
        const auto flat = counterfactual_equities(acct, TradingStyle::balanced, p0, p0, 0.0);
        const auto idx = action_index(ActionKind::hold);
        const double r_hold = action_reward(flat.e_prev, flat.equity[idx], 0.0, flat.commission[idx], reward);
        c.expect(r_hold == 0.0, "flat hold reward " + std::to_string(r_hold));

        // all-cash buy replicates the benchmark
        const double p1 = p0 * (1.0 + move(rng));
        const auto cf = counterfactual_equities(AccountState::all_cash(acct.cash), TradingStyle::balanced, p0, p1, 0.0);
        const double r_bm = p1 / p0 - 1.0;
        const auto b = action_index(ActionKind::buy);
        const double r_buy = action_reward(cf.e_prev, cf.equity[b], r_bm, cf.commission[b], reward);
        c.expect(std::abs(r_buy - 0.8 * r_bm) <= 1e-12, "buy reward off by " + std::to_string(r_buy - 0.8 * r_bm));
    }
    return c;
}

Check whit_bounds() {
    Check c;
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> pct(-0.15, 0.15), eps(0.0005, 0.08), p(0.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
        const double x = pct(rng), e = eps(rng), pt = p(rng);
        for (int sign_ok : {0, 1}) {
            const double w = weighted_hit(sign_ok, x, e, pt);
            c.expect(w >= 0.0 && w <= 1.0, "w_hit out of range");
            if (sign_ok == 0) c.expect(w == 0.0, "w_hit nonzero with sign_ok 0");
        }
        c.expect(std::abs(weighted_hit(1, e, e, 1.0) - std::tanh(1.0)) <= 1e-12, "tanh(1) at |pct| = eps");
        c.expect(std::abs(weighted_hit(1, -e, e, 1.0) - std::tanh(1.0)) <= 1e-12, "tanh(1) at pct = -eps");
    }
    return c;
}

Check metric_oracles() {
    Check c;
    std::mt19937_64 rng(707);
    std::uniform_int_distribution<int> len(3, 400);
    std::uniform_real_distribution<double> vol(0.001, 0.05), drift(-0.003, 0.003);
    for (int k = 0; k < 500; ++k) {
        std::normal_distribution<double> z(drift(rng), vol(rng));
        std::vector<double> curve{100000.0};
        const int n = len(rng);
        for (int i = 1; i < n; ++i) curve.push_back(curve.back() * std::exp(z(rng)));
        const auto m = compute_metrics(curve, 0);
        const auto tag = "curve " + std::to_string(k);
        c.expect(oracle::close(m.cr_pct, oracle::cumulative_return_pct(curve), 1e-9), tag + " CR");
        c.expect(oracle::close(m.sharpe, oracle::sharpe(curve), 1e-9), tag + " SPR");
        c.expect(oracle::close(m.mdd_pct, oracle::max_drawdown_pct(curve), 1e-9), tag + " MDD");
        c.expect(oracle::close(m.av_pct, oracle::annualized_vol_pct(curve), 1e-9), tag + " AV");
        c.expect(m.mdd_pct <= 0.0, tag + " MDD positive");
    }
    return c;
}

Check determinism() {
    Check c;
    fixture::TempDir dir("acceptance-det");
    const std::filesystem::path sample = AGENTBT_SAMPLE_DIR;
    const auto cfg = load_config(sample / "config.ini");
    const DataPaths paths{sample / "prices.csv", sample / "news.jsonl", sample / "reports"};
    run_backtest(cfg, paths, dir / "a");
    run_backtest(cfg, paths, dir / "b");
    const auto a = fixture::snapshot_dir(dir / "a");
    const auto b = fixture::snapshot_dir(dir / "b");
    c.expect(a.size() == 7, "expected 7 artifacts, got " + std::to_string(a.size()));
    c.expect(a == b, "artifacts differ");
    std::size_t bytes = 0;
    for (const auto& [name, body] : a) bytes += body.size();
    if (c.ok) c.detail = std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes identical";
    return c;
}

Check buy_and_hold() {
    Check c;
    std::vector<std::string> notes;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto closes = fixture::breakout_closes(60, seed);
        const auto bars = fixture::bars(closes);
        const auto md = prices_only(closes);
        const std::string rm_off = "[flags]\nrisk_management = false\n";
        const auto free = simulate(config_for(bars, "stub:always-up+echo-forecast", rm_off, 0.0), md);
        const auto paid = simulate(config_for(bars, "stub:always-up+echo-forecast", rm_off, 0.001), md);

        const double growth = closes.back() / closes[21];
        const double bh_cr = 100.0 * (growth - 1.0);
        const double drag = 100.0 * growth * (1.0 - 1.0 / 1.001);
        const auto tag = "seed " + std::to_string(seed);
        c.expect(free.metrics.n_trades == 1 && paid.metrics.n_trades == 1, tag + " expected exactly one trade");
        c.expect(free.trades[0].action.kind == ActionKind::buy, tag + " first day did not buy");
        c.expect(std::abs(free.metrics.cr_pct - bh_cr) <= 1e-9,
                 tag + " CR " + std::to_string(free.metrics.cr_pct) + " vs " + std::to_string(bh_cr));
        c.expect(std::abs((free.metrics.cr_pct - paid.metrics.cr_pct) - drag) <= 1e-9,
                 tag + " commission drag " + std::to_string(free.metrics.cr_pct - paid.metrics.cr_pct) + " vs " +
                     std::to_string(drag));
        notes.push_back(format_fixed(bh_cr, 4));
    }
    if (c.ok) c.detail = "B&H CR " + notes[0] + "%, " + notes[1] + "%, " + notes[2] + "%";
    return c;
}

Check sft_contract() {
    Check c;
    fixture::TempDir dir("acceptance-sft");
    const auto in = fixture::write_run_inputs(dir.path(), 40, 17);
    const auto cfg = parse_config(fixture::config_text(in.start, in.end, "stub:echo-forecast"), {});
    const auto run = dir / "run";
    run_backtest(cfg, {in.prices, in.news, in.reports}, run);

    // expectation computed from the raw trajectory file
    std::vector<std::pair<std::string, double>> expected;
    std::set<std::string> last_day_inputs;
    std::ifstream traj(run / "trajectories.jsonl");
    std::string line;
    std::size_t unlabeled = 0;
    while (std::getline(traj, line)) {
        const auto j = json::parse(line);
        if (j["date"] == in.end) {
            c.expect(j["labels"].is_null(), "final day record carries labels");
            last_day_inputs.insert(j["input_text"].get<std::string>());
        }
        if (j["labels"].is_null()) {
            ++unlabeled;
            continue;
        }
        const auto agent = j["agent_name"].get<std::string>();
        const auto& labels = j["labels"];
        if (agent == "decision" && labels["decision"]["taken_reward"].get<double>() > 0.0) {
            expected.emplace_back(j["input_text"], labels["decision"]["taken_reward"]);
        } else if (agent == "forecast" && labels["forecast"]["w_hit"].get<double>() >= 0.3) {
            expected.emplace_back(j["input_text"], labels["forecast"]["w_hit"]);
        }
    }
    c.expect(unlabeled == last_day_inputs.size() && unlabeled == 5, "unlabeled records outside the final day");

    std::vector<std::pair<std::string, double>> got;
    std::ifstream sft(run / "sft.jsonl");
    while (std::getline(sft, line)) {
        const auto j = json::parse(line);
        c.expect(j.is_object() && j.size() == 4, "sample must have exactly four fields");
        c.expect(j["instruction"].is_string() && j["response"].is_string() && j["score"].is_number() &&
                     j["source"].is_string(),
                 "sample field types");
        const auto source = j["source"].get<std::string>();
        c.expect(source == "forecast" || source == "decision", "unknown source " + source);
        c.expect(!last_day_inputs.count(j["instruction"].get<std::string>()), "final day leaked into SFT");
        got.emplace_back(j["instruction"], j["score"]);
    }
    c.expect(got == expected, "sft.jsonl has " + std::to_string(got.size()) + " samples, expected " +
                                  std::to_string(expected.size()));
    c.expect(!expected.empty(), "fixture produced no qualifying samples");
    if (c.ok) c.detail = std::to_string(got.size()) + " samples";
    return c;
}

Check ablations() {
    Check c;
    const auto& prompts = PromptLibrary::builtin();

    // RM: a falling path after a buy
    {
        std::mt19937_64 rng(808);
        const auto closes = drifting_path(rng, 40, -0.01, 0.01);
        const auto bars = fixture::bars(closes);
        const auto on = simulate(config_for(bars, "stub:always-up"), prices_only(closes));
        const auto off = simulate(config_for(bars, "stub:always-up", "[flags]\nrisk_management = false\n"),
                                  prices_only(closes));
        std::size_t forced_on = 0, forced_off = 0;
        for (const auto& t : on.trades) forced_on += t.action.origin != TradeOrigin::agent;
        for (const auto& t : off.trades) forced_off += t.action.origin != TradeOrigin::agent;
        c.expect(forced_on > 0, "RM on produced no forced exits");
        c.expect(forced_off == 0, "RM off produced forced exits");
        c.expect(on.trajectories.size() == off.trajectories.size(), "RM changed the agent records");
    }

    fixture::TempDir dir("acceptance-ablation");
    const auto in = fixture::write_run_inputs(dir.path(), 16, 23);
    // a near-duplicate of the first news item, same day
    {
        const auto first = json::parse(fixture::read_text(in.news).substr(0, fixture::read_text(in.news).find('\n')));
        json dup = first;
        dup["body"] = first["body"].get<std::string>() + " Shares reacted.";
        std::ofstream(in.news, std::ios::app) << dup.dump() << "\n";
    }
    const auto data = load_market_data({in.prices, in.news, in.reports});
    auto run = [&](const std::string& flags) {
        return simulate(parse_config(fixture::config_text(in.start, in.end, "stub:echo-forecast", "[flags]\n" + flags), {}),
                        data);
    };
    const auto base = run("");

    // SR: only forecast/style/decision prompts change, and each carries the notice
    {
        const auto off = run("self_reflection = false\n");
        const auto notice = prompts.render("notice.reflection_disabled", {});
        c.expect(off.trajectories.size() == base.trajectories.size(), "SR changed record count");
        for (std::size_t i = 0; i < off.trajectories.size() && i < base.trajectories.size(); ++i) {
            const auto& a = base.trajectories[i];
            const auto& b = off.trajectories[i];
            const bool reflective = a.agent_name == "forecast" || a.agent_name == "style" || a.agent_name == "decision";
            c.expect(a.output_text == b.output_text, "SR changed an output");
            c.expect(a.labels == b.labels, "SR changed labels");
            c.expect(reflective ? b.input_text.find(notice) != std::string::npos : a.input_text == b.input_text,
                     "SR toggled the wrong prompts on " + a.agent_name);
            c.expect(a.input_text.find(notice) == std::string::npos, "SR on still shows the disabled notice");
        }
        c.expect(off.metrics == base.metrics, "SR changed trading under a reflection-blind stub");
    }

    // RE: report passages in hybrid order and exact-only news dedupe
    {
        const auto off = run("rerank_embedding = false\n");
        const auto title = json::parse(fixture::read_text(in.news).substr(0, fixture::read_text(in.news).find('\n')))["title"]
                               .get<std::string>();
        std::size_t on_copies = 0, off_copies = 0;
        for (const auto& t : base.trajectories) if (t.agent_name == "news") on_copies += occurrences(t.input_text, title);
        for (const auto& t : off.trajectories) if (t.agent_name == "news") off_copies += occurrences(t.input_text, title);
        c.expect(off_copies == on_copies + 1, "RE off should keep the near-duplicate news item");

        const auto entry = *data.reports.latest_visible("ACME", data.prices[in.bars.size() - 1].date);
        RetrievalConfig rc;
        const auto chunks = chunk_report(ReportLibrary::read_text(entry), rc, entry.period);
        HashingEmbeddingProvider emb;
        KeywordReranker rr;
        auto top = retrieve_topk(prompts.render("report.query", {}), chunks, emb, rc);
        std::vector<int> hybrid_order, rerank_order;
        for (std::size_t i = 0; i < top.size() && i < rc.rerank_top_k; ++i) hybrid_order.push_back(top[i].chunk.ordinal);
        for (const auto& p : rerank(prompts.render("report.rerank_query", {}), top, rr, rc).passages) {
            rerank_order.push_back(p.chunk.ordinal);
        }
        for (const auto& t : base.trajectories) {
            if (t.agent_name == "report" && t.input_text.find("[chunk") != std::string::npos) {
                c.expect(chunk_ordinals(t.input_text) == rerank_order, "RE on: passages not in reranked order");
            }
        }
        for (const auto& t : off.trajectories) {
            if (t.agent_name == "report" && t.input_text.find("[chunk") != std::string::npos) {
                c.expect(chunk_ordinals(t.input_text) == hybrid_order, "RE off: passages not in hybrid order");
            }
        }
    }

    // PC: no style agent, account withheld, balanced sizing
    {
        const auto off = run("style_and_state = false\n");
        const auto notice = prompts.render("notice.no_account", {});
        std::size_t style_records = 0;
        for (const auto& t : off.trajectories) {
            style_records += t.agent_name == "style";
            if (t.agent_name == "decision") c.expect(t.input_text.find(notice) != std::string::npos, "PC off shows the account");
        }
        for (const auto& t : base.trajectories) {
            if (t.agent_name == "decision") c.expect(t.input_text.find(notice) == std::string::npos, "PC on hides the account");
        }
        c.expect(style_records == 0, "PC off still ran the style agent");
        c.expect(off.trajectories.size() == base.trajectories.size() - base.trades.size(), "PC off record count");
        for (const auto& t : off.trades) c.expect(t.action.style == TradingStyle::balanced, "PC off traded a non-balanced style");
    }
    return c;
}

}  // namespace

int main() {
    int failed = 0;
    failed += report(1, "indicator oracle suite", indicator_oracles);
    failed += report(2, "ATR literal summation", atr_literal);
    failed += report(3, "gate dominance", gate_dominance);
    failed += report(4, "risk first crossing", risk_first_crossing);
    failed += report(5, "reward identities", reward_identities);
    failed += report(6, "w_hit bounds", whit_bounds);
    failed += report(7, "metric oracles", metric_oracles);
    failed += report(8, "end-to-end determinism", determinism);
    failed += report(9, "buy-and-hold replication", buy_and_hold);
    failed += report(10, "SFT filter contract", sft_contract);
    failed += report(11, "ablation plumbing", ablations);
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
