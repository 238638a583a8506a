#pragma once

#include <string>

#include <json.hpp>

namespace corge::io {

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Parses one JSONL line; wraps parse errors with the source line number.
nlohmann::json parse_jsonl_line(const std::string& line, const std::string& path,
                                std::size_t line_number);

}  // namespace corge::io
