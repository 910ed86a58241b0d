#include "skillsynth/prompts.hpp"

#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"

namespace skillsynth {

std::filesystem::path default_prompts_dir() { return SKILLSYNTH_PROMPTS_DIR; }

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = tpl.find("}}}", open + 3);
        if (close == std::string_view::npos) break;
        out.append(tpl.substr(pos, open - pos));
        const std::string key(tpl.substr(open + 3, close - open - 3));
        if (auto it = vars.find(key); it != vars.end()) out += it->second;
        else out.append(tpl.substr(open, close + 3 - open));
        pos = close + 3;
    }
    out.append(tpl.substr(pos));
    return out;
}

std::string load_prompt(std::string_view name, const std::filesystem::path& dir) {
    const auto file = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(file)) throw ConfigError("prompt template not found: " + file.string());
    return read_file(file);
}

} // namespace skillsynth
