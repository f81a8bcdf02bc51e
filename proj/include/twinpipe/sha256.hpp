#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace twinpipe {

/// SHA-256 over raw bytes; returns lowercase hex. Digest algorithm is pinned
/// for provenance records.
std::string sha256_hex(std::string_view bytes);

/// "sha256:<hex>" of a file's raw bytes. Throws Errc::io_error if unreadable.
std::string sha256_file(const std::string& path);

inline std::string digest_string(std::string_view bytes) {
  return "sha256:" + sha256_hex(bytes);
}

}  // namespace twinpipe
