#include "twinpipe/jsonio.hpp"

#include "twinpipe/error.hpp"
#include "twinpipe/util.hpp"

namespace twinpipe {

json load_json_file(const std::string& path) {
  if (!file_exists(path)) raise(Errc::file_not_found, "no such file: " + path);
  std::string text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) raise(Errc::invalid_argument, "malformed JSON in " + path);
  return doc;
}

void save_json_file(const std::string& path, const json& doc) {
  atomic_write_file(path, dump_json(doc));
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace twinpipe
