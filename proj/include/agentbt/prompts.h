#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace agentbt {

using PromptVars = std::map<std::string, std::string, std::less<>>;

/// Named prompt templates with `{{name}}` placeholders. The built-in set is
/// compiled from the repository's `prompts/` directory.
class PromptLibrary {
public:
    static const PromptLibrary& builtin();
    /// Every `*.txt` file in `dir`, keyed by file stem.
    static PromptLibrary from_directory(const std::filesystem::path& dir);

    bool contains(std::string_view name) const;
    const std::string& raw(std::string_view name) const;
    /// Throws std::out_of_range for an unknown template and std::invalid_argument
    /// when a placeholder has no value.
    std::string render(std::string_view name, const PromptVars& vars) const;

    void set(std::string name, std::string text);

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

std::string render_template(std::string_view text, const PromptVars& vars);

}  // namespace agentbt
