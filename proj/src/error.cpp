#include "twinpipe/error.hpp"

namespace twinpipe {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::empty_channel: return "EmptyChannel";
    case Errc::nonmonotonic_timestamps: return "NonmonotonicTimestamps";
    case Errc::incompatible_window: return "IncompatibleWindow";
    case Errc::no_temporal_overlap: return "NoTemporalOverlap";
    case Errc::unknown_master_channel: return "UnknownMasterChannel";
    case Errc::mismatched_axes: return "MismatchedAxes";
    case Errc::window_too_short: return "WindowTooShort";
    case Errc::nonpositive_setup: return "NonpositiveSetup";
    case Errc::file_not_found: return "FileNotFound";
    case Errc::missing_column: return "MissingColumn";
    case Errc::empty_file: return "EmptyFile";
    case Errc::duplicate_channel_name: return "DuplicateChannelName";
    case Errc::unknown_column: return "UnknownColumn";
    case Errc::missing_data_found: return "MissingDataFound";
    case Errc::all_missing_column: return "AllMissingColumn";
    case Errc::too_few_rows: return "TooFewRows";
    case Errc::missing_target_column: return "MissingTargetColumn";
    case Errc::insufficient_rows: return "InsufficientRows";
    case Errc::all_rows_incomplete: return "AllRowsIncomplete";
    case Errc::degenerate_data: return "DegenerateData";
    case Errc::missing_feature_column: return "MissingFeatureColumn";
    case Errc::model_table_schema_mismatch: return "ModelTableSchemaMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::no_comparable_pairs: return "NoComparablePairs";
    case Errc::unsupported_schema_version: return "UnsupportedSchemaVersion";
    case Errc::corrupt_artifact: return "CorruptArtifact";
    case Errc::empty_metrics: return "EmptyMetrics";
    case Errc::unparseable_manifest: return "UnparseableManifest";
    case Errc::validation_failed: return "ValidationFailed";
    case Errc::step_failed: return "StepFailed";
    case Errc::workdir_not_writable: return "WorkdirNotWritable";
    case Errc::duration_too_short: return "DurationTooShort";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io_error: return "IoError";
    case Errc::internal: return "Internal";
  }
  return "Unknown";
}

ErrorClass errc_class(Errc c) {
  switch (c) {
    case Errc::file_not_found:
    case Errc::io_error:
    case Errc::workdir_not_writable:
      return ErrorClass::io;
    case Errc::internal:
      return ErrorClass::internal;
    default:
      return ErrorClass::user;
  }
}

}  // namespace twinpipe
