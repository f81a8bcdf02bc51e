#pragma once

#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"
#include "twinpipe/model.hpp"

namespace twinpipe {

/// Everything the report template consumes. run_context carries the injected
/// timestamp, input digests, the command line and reapply paths; nothing in
/// the report is read from the wall clock, so identical inputs give
/// byte-identical reports.
struct ReportInputs {
  Metrics metrics;
  json model_meta;  // model artifact JSON minus payload
  std::vector<Timestamp> timestamps;
  std::vector<double> actual;
  std::vector<double> predicted;
  json run_context;
};

struct Report {
  json machine;          // report.json
  std::string markdown;  // report.md, rendered from the JSON only
};

Report generate_report(const ReportInputs& inputs);

}  // namespace twinpipe
