#include "fixtures.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <unistd.h>

namespace fixture {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::vector<agentbt::Date> weekdays(agentbt::Date first, std::size_t n) {
    std::vector<agentbt::Date> out;
    auto serial = first.serial();
    while (out.size() < n) {
        // 1970-01-01 was a Thursday: serial % 7 == 2 is Saturday, 3 is Sunday
        const int dow = static_cast<int>(((serial % 7) + 7) % 7);
        if (dow != 2 && dow != 3) {
            const auto days = std::chrono::sys_days{std::chrono::days{serial}};
            const std::chrono::year_month_day ymd{days};
            out.push_back(agentbt::Date::from_ymd(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                                                  static_cast<unsigned>(ymd.day())));
        }
        ++serial;
    }
    return out;
}

std::vector<agentbt::PriceBar> bars(const std::vector<double>& closes, agentbt::Date first) {
    const auto dates = weekdays(first, closes.size());
    std::vector<agentbt::PriceBar> out;
    for (std::size_t i = 0; i < closes.size(); ++i) out.push_back({dates[i], closes[i]});
    return out;
}

agentbt::PriceSeries series(const std::vector<double>& closes) { return agentbt::PriceSeries(bars(closes)); }

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double sigma, double start) {
    std::normal_distribution<double> step(0.0, sigma);
    std::vector<double> out{start};
    while (out.size() < n) out.push_back(out.back() * std::exp(step(rng)));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_prices(const std::filesystem::path& path, const std::vector<agentbt::PriceBar>& bars) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "date,close\n";
    for (const auto& b : bars) ss << b.date.iso() << "," << b.close << "\n";
    write_text(path, ss.str());
}

std::string config_text(const std::string& start, const std::string& end, const std::string& chat,
                        const std::string& extra, double commission) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "[run]\nsymbol = ACME\nstart = " << start << "\nend = " << end
       << "\ninitial_cash = 100000\ncommission_rate = " << commission << "\nseed = 7\n\n"
       << "[provider]\nchat = \"" << chat << "\"\n\n" << extra;
    return ss.str();
}

std::vector<double> breakout_closes(std::size_t trading_days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.004, 0.004);
    std::vector<double> closes;
    // flat-ish warm-up below 100, then a strict high on the first trading day
    for (int i = 0; i < 21; ++i) closes.push_back(95.0 + 2.0 * noise(rng) / 0.004);
    closes.push_back(101.0);
    while (closes.size() < 21 + trading_days) {
        closes.push_back(closes.back() * std::exp(0.003 + noise(rng)));
    }
    return closes;
}

RunInputs write_run_inputs(const std::filesystem::path& dir, std::size_t trading_days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RunInputs in;
    in.bars = bars(random_walk(rng, 21 + trading_days, 0.02));
    in.start = in.bars[21].date.iso();
    in.end = in.bars.back().date.iso();
    in.prices = dir / "prices.csv";
    write_prices(in.prices, in.bars);

    in.news = dir / "news.jsonl";
    std::ostringstream news;
    const char* items[][2] = {
        {"Acme beats earnings estimates", "Quarterly earnings beat estimates and guidance was raised on strong growth."},
        {"Acme faces lawsuit over patents", "A rival filed a lawsuit; analysts expect weak sentiment and a possible decline."},
        {"Acme opens new office", "The company opened a new office downtown."},
    };
    for (std::size_t i = 0; i < trading_days; i += 4) {
        const auto& it = items[(i / 4) % 3];
        news << nlohmann::json{{"date", in.bars[21 + i].date.iso()}, {"title", it[0]}, {"body", it[1]}}.dump()
             << "\n";
    }
    write_text(in.news, news.str());

    in.reports = dir / "reports";
    write_text(in.reports / "fy.txt",
               "Acme annual report. Revenue rose 12 percent to 40 billion dollars. Gross margin was 55 percent. "
               "Operating income grew to 9 billion dollars. Net income was 7 billion dollars. The outlook calls for "
               "steady growth. Risk factors include supplier concentration. Headcount was stable.\n");
    write_text(in.reports / "manifest.jsonl",
               nlohmann::json{{"symbol", "ACME"}, {"period", "FY"}, {"date", in.bars[22].date.iso()}, {"path", "fy.txt"}}
                       .dump() +
                   "\n");
    return in;
}

std::vector<std::pair<std::string, std::string>> snapshot_dir(const std::filesystem::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        out.emplace_back(e.path().filename().string(), read_text(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fixture
