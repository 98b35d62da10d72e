#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "agentbt/common.h"
#include "agentbt/datasynth.h"
#include "agentbt/gate.h"
#include "agentbt/providers.h"
#include "agentbt/retrieval.h"
#include "agentbt/risk.h"

namespace agentbt {

/// Ablation switches; risk management lives in RiskConfig::enabled.
struct RunFlags {
    bool self_reflection = true;
    bool rerank_embedding = true;
    bool style_and_state = true;
};

struct BacktestConfig {
    std::string symbol;
    Date start;
    Date end;
    double initial_cash = 100000.0;
    double commission_rate = 0.001;
    std::int64_t seed = 0;
    std::size_t reflection_window = 20;

    ProviderConfig provider;
    RunFlags flags;
    GateConfig gate;
    RiskConfig risk;
    RetrievalConfig retrieval;
    BandConfig band;
    RewardConfig reward;
    SftFilter sft;

    std::filesystem::path keywords_file;  // empty: built-in table
    std::filesystem::path prompts_dir;    // empty: built-in templates

    std::filesystem::path base_dir;  // relative paths resolve here
    std::string source_text;         // verbatim configuration file

    /// Throws ConfigError on any out-of-range or inconsistent setting.
    void validate() const;
};

/// INI-style file with [run], [provider], [flags], [gate], [risk], [retrieval],
/// [band], [reward], and [sft] sections. Unknown sections or keys are errors.
BacktestConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
BacktestConfig load_config(const std::filesystem::path& path);

}  // namespace agentbt
