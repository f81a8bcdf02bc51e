#include "twinpipe/csv.hpp"

#include <fstream>
#include <sstream>

#include "twinpipe/util.hpp"

namespace twinpipe {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvDocument read_csv(const std::string& path) {
  if (!file_exists(path)) raise(Errc::file_not_found, "no such file: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open " + path);

  CsvDocument doc;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      doc.header = split_line(line);
      have_header = true;
    } else {
      doc.rows.push_back(split_line(line));
    }
  }
  if (!have_header || doc.rows.empty())
    raise(Errc::empty_file, "no data rows in " + path);
  return doc;
}

std::string table_to_csv(const TimeTable& table) {
  std::string out = "timestamp_ms";
  for (const auto& col : table.columns()) {
    out += ',';
    out += col.name;
  }
  out += '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    out += std::to_string(table.timestamps()[r]);
    for (const auto& col : table.columns()) {
      out += ',';
      if (!is_missing(col.values[r])) out += format_double(col.values[r]);
    }
    out += '\n';
  }
  return out;
}

void write_table_csv(const std::string& path, const TimeTable& table) {
  atomic_write_file(path, table_to_csv(table));
}

TimeTable read_table_csv(const std::string& path) {
  CsvDocument doc = read_csv(path);
  if (doc.header.empty() || doc.header[0] != "timestamp_ms")
    raise(Errc::missing_column, path + ": first column must be timestamp_ms");

  std::size_t ncols = doc.header.size() - 1;
  std::vector<Timestamp> timestamps;
  timestamps.reserve(doc.rows.size());
  std::vector<TimeTable::Column> columns(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    columns[c].name = doc.header[c + 1];
    columns[c].values.reserve(doc.rows.size());
  }

  std::size_t line_no = 1;
  for (const auto& row : doc.rows) {
    ++line_no;
    if (row.size() != doc.header.size())
      raise(Errc::invalid_argument,
            path + ": line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                " fields, expected " + std::to_string(doc.header.size()));
    std::int64_t ts = 0;
    if (!parse_int64(row[0], ts))
      raise(Errc::invalid_argument, path + ": bad timestamp on line " + std::to_string(line_no));
    timestamps.push_back(ts);
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = missing();
      if (!row[c + 1].empty() && !parse_double(row[c + 1], v)) v = missing();
      columns[c].values.push_back(v);
    }
  }

  bool regular = timestamps.size() >= 2;
  std::int64_t period = regular ? timestamps[1] - timestamps[0] : 0;
  for (std::size_t i = 2; i < timestamps.size() && regular; ++i)
    if (timestamps[i] - timestamps[i - 1] != period) regular = false;
  if (!regular) period = 0;

  return TimeTable(std::move(timestamps), std::move(columns), regular, period);
}

}  // namespace twinpipe
