#pragma once

#include <string>
#include <vector>

#include "twinpipe/timeseries.hpp"

namespace twinpipe {

// CSV dialect, enforced bit-exactly: comma separator, '.' decimal point,
// first row is the header, UTF-8, missing serialized as an empty field,
// no quoting. Table files carry "timestamp_ms" as the first column.

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvDocument read_csv(const std::string& path);

std::string table_to_csv(const TimeTable& table);
void write_table_csv(const std::string& path, const TimeTable& table);
TimeTable read_table_csv(const std::string& path);

}  // namespace twinpipe
