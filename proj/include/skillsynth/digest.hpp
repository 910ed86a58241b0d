#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace skillsynth {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& file);

/// First 8 bytes of the SHA-256 of `data`, big-endian.
std::uint64_t hash64(std::string_view data);

/// Content-derived identifier: `prefix` + 16 hex chars of SHA-256 over the
/// NUL-joined parts.
std::string stable_id(std::string_view prefix, std::initializer_list<std::string_view> parts);

} // namespace skillsynth
