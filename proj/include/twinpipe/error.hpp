#pragma once

#include <stdexcept>
#include <string>

namespace twinpipe {

enum class Errc {
  // timeseries
  empty_channel,
  nonmonotonic_timestamps,
  incompatible_window,
  no_temporal_overlap,
  unknown_master_channel,
  // sensors
  mismatched_axes,
  window_too_short,
  nonpositive_setup,
  // ingest
  file_not_found,
  missing_column,
  empty_file,
  duplicate_channel_name,
  // quality
  unknown_column,
  missing_data_found,
  all_missing_column,
  // split
  too_few_rows,
  missing_target_column,
  // model
  insufficient_rows,
  all_rows_incomplete,
  degenerate_data,
  missing_feature_column,
  model_table_schema_mismatch,
  length_mismatch,
  no_comparable_pairs,
  unsupported_schema_version,
  corrupt_artifact,
  // report
  empty_metrics,
  // runner
  unparseable_manifest,
  validation_failed,
  step_failed,
  workdir_not_writable,
  // synth
  duration_too_short,
  // generic
  invalid_argument,
  io_error,
  internal,
};

// Exit-code classes used by the CLI: 1 user/validation, 2 I/O, 3 internal.
enum class ErrorClass { user = 1, io = 2, internal = 3 };

const char* errc_name(Errc c);
ErrorClass errc_class(Errc c);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }
  ErrorClass error_class() const { return errc_class(code_); }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace twinpipe
