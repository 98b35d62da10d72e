#include "agentbt/prompts.h"

#include <fstream>
#include <iterator>
#include <stdexcept>

#include "agentbt/common.h"

namespace agentbt {

// generated at configure time from prompts/*.txt
void register_builtin_prompts(PromptLibrary& lib);

const PromptLibrary& PromptLibrary::builtin() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        register_builtin_prompts(l);
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("prompt directory not found: " + dir.string());
    PromptLibrary lib;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        lib.set(entry.path().stem().string(),
                std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
    }
    return lib;
}

bool PromptLibrary::contains(std::string_view name) const {
    return templates_.find(name) != templates_.end();
}

const std::string& PromptLibrary::raw(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw std::out_of_range("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

std::string PromptLibrary::render(std::string_view name, const PromptVars& vars) const {
    return render_template(raw(name), vars);
}

void PromptLibrary::set(std::string name, std::string text) {
    templates_[std::move(name)] = std::move(text);
}

std::string render_template(std::string_view text, const PromptVars& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        const auto key = text.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        if (it == vars.end()) {
            throw std::invalid_argument("prompt placeholder '" + std::string(key) + "' has no value");
        }
        out.append(it->second);
        pos = close + 2;
    }
    // templates end with a newline in the repository; prompts should not
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace agentbt
