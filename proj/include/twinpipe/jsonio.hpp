#pragma once

#include <json.hpp>

#include <string>

namespace twinpipe {

// ordered_json keeps insertion order on dump, which the byte-determinism
// contract for reports and run records relies on.
using json = nlohmann::ordered_json;

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& doc);

/// Canonical text form used everywhere a JSON document is hashed or written.
std::string dump_json(const json& doc);

}  // namespace twinpipe
