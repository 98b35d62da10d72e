#include <iostream>

#include <CLI11.hpp>

#include "agentbt/backtest.h"
#include "agentbt/config.h"
#include "agentbt/datasynth.h"

namespace {

enum Exit { ok = 0, usage = 1, data = 2, provider = 3 };

void print_metrics(const agentbt::MetricsReport& m) {
    std::cout << agentbt::to_json(m).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Daily-bar backtester for a multi-agent trading pipeline"};
    app.require_subcommand(1);

    std::string config, prices, news, reports, out;
    auto* run = app.add_subcommand("run", "Run a backtest and write a run directory");
    run->add_option("--config", config, "Configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--prices", prices, "date,close CSV")->required()->check(CLI::ExistingFile);
    run->add_option("--news", news, "News JSONL")->check(CLI::ExistingFile);
    run->add_option("--reports", reports, "Report directory with manifest.jsonl")->check(CLI::ExistingDirectory);
    run->add_option("--out", out, "Run directory")->required();

    std::string run_dir;
    auto* metrics = app.add_subcommand("metrics", "Print the stored metrics of a run");
    metrics->add_option("--run", run_dir, "Run directory")->required();

    std::string sft_out;
    double min_reward = 0.0, min_whit = 0.3;
    auto* sft = app.add_subcommand("export-sft", "Filter labeled trajectories into SFT samples");
    sft->add_option("--run", run_dir, "Run directory")->required();
    sft->add_option("--out", sft_out, "Output JSONL")->required();
    sft->add_option("--min-reward", min_reward, "Keep decisions with reward strictly above this")
        ->capture_default_str();
    sft->add_option("--min-whit", min_whit, "Keep forecasts with w_hit at or above this")->capture_default_str();

    auto* rep = app.add_subcommand("replay", "Recompute metrics from a run directory and compare");
    rep->add_option("--run", run_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*run) {
            const auto cfg = agentbt::load_config(config);
            agentbt::DataPaths paths{prices, {}, {}};
            if (!news.empty()) paths.news = news;
            if (!reports.empty()) paths.reports = reports;
            const auto result = agentbt::run_backtest(cfg, paths, out);
            print_metrics(result.metrics);
        } else if (*metrics) {
            print_metrics(agentbt::read_metrics(run_dir));
        } else if (*sft) {
            const auto records = agentbt::read_trajectories(std::filesystem::path(run_dir) / "trajectories.jsonl");
            const auto samples = agentbt::filter_sft(records, {min_whit, min_reward});
            agentbt::emit_sft(samples, sft_out);
            std::cout << samples.size() << " samples written to " << sft_out << "\n";
        } else if (*rep) {
            print_metrics(agentbt::replay(run_dir));
            std::cout << "replay matches stored metrics\n";
        }
    } catch (const agentbt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage;
    } catch (const agentbt::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return provider;
    } catch (const agentbt::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return data;
    }
    return ok;
}
