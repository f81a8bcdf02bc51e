#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace twinpipe {

std::string read_file(const std::string& path);

/// Writes via a temp file in the same directory and renames on success, so a
/// failing step never leaves a half-written output behind.
void atomic_write_file(const std::string& path, std::string_view content);

bool file_exists(const std::string& path);

/// Shortest round-trip decimal form of a double (std::to_chars). All CSV and
/// text output goes through this so reruns are byte-identical.
std::string format_double(double v);

/// Inverse of format_double; returns false on malformed input.
bool parse_double(std::string_view text, double& out);

bool parse_int64(std::string_view text, std::int64_t& out);

}  // namespace twinpipe
