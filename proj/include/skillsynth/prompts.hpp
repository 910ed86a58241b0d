#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace skillsynth {

std::filesystem::path default_prompts_dir();

/// Replaces every {{{name}}} slot with vars[name]. Unknown slots are left
/// untouched.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

/// Loads `<dir>/<name>.txt`. Throws ConfigError when the file is missing.
std::string load_prompt(std::string_view name, const std::filesystem::path& dir = default_prompts_dir());

} // namespace skillsynth
