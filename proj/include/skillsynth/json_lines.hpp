#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "skillsynth/errors.hpp"

namespace skillsynth {

/// Calls fn(record, line_number) for each non-blank line. Parse failures
/// throw DataError naming the source and 1-based line.
template <class Fn>
void for_each_json_line(std::string_view text, std::string_view source_name, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": malformed JSON (" +
                            e.what() + ")");
        }
        if (!rec.is_object()) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": record is not an object");
        }
        fn(rec, line_no);
    }
}

} // namespace skillsynth
