#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace skillsynth {

std::string read_file(const std::filesystem::path& file);

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& file, std::string_view content);

} // namespace skillsynth
