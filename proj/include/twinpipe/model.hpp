#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"
#include "twinpipe/timeseries.hpp"

namespace twinpipe {

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when absent
  int min_samples_leaf = 5;
  std::optional<int> mtry;       // default ceil(p/3)
  std::uint64_t seed = 0;
};

struct LinearParams {
  double ridge_epsilon = 1e-8;
};

struct ModelSpec {
  enum class Kind { linear, random_forest } kind = Kind::linear;
  std::string target;
  std::vector<std::string> features;
  ForestParams forest;
  LinearParams linear;

  static ModelSpec from_json(const json& doc);
  static ModelSpec load(const std::string& path);
  json to_json() const;
  int effective_mtry() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict_row(const std::vector<const std::vector<double>*>& cols, std::size_t row) const;
};

/// Trained model plus the metadata needed to audit and reapply it. The
/// content hash covers the canonical JSON form minus the hash field itself.
struct ModelArtifact {
  ModelSpec spec;
  // linear payload
  double intercept = 0.0;
  std::vector<double> coefficients;  // aligned with spec.features
  // forest payload
  std::vector<Tree> trees;
  // training metadata
  std::size_t n_train = 0;
  std::size_t rows_excluded = 0;
  bool ridge_applied = false;
  std::map<std::string, std::string> feature_units;
  std::map<std::string, std::pair<double, double>> feature_ranges;  // observed in training
  std::string trained_at;  // injected by the caller, never wall clock

  json to_json() const;
  static ModelArtifact from_json(const json& doc);
  std::string content_hash() const;
};

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
  std::size_t n = 0;
  std::string note;

  json to_json() const;
};

struct PredictResult {
  std::vector<double> values;  // missing where a feature is missing
  std::vector<bool> usable;
};

/// Ordinary least squares with intercept via Householder QR; when the system
/// is rank-deficient the solve falls back to normal equations with
/// ridge_epsilon on the diagonal (recorded in the artifact). Rows with a
/// missing feature or target are excluded and counted.
ModelArtifact fit_linear(const TimeTable& train, const ModelSpec& spec);

/// Regression forest: per tree a bootstrap sample of size n drawn from a
/// PRNG seeded seed XOR tree_index, mtry features per node, best split by
/// weighted child variance, leaf predicts the mean. The per-tree seeding
/// makes training bit-identical for any thread count.
ModelArtifact fit_forest(const TimeTable& train, const ModelSpec& spec);

PredictResult predict(const ModelArtifact& model, const TimeTable& table);

/// rmse, mae and r2 = 1 - SSE/SST over the pairs where both sides are
/// present. SST == 0 with SSE == 0 counts as perfect (r2 = 1); SST == 0 with
/// SSE > 0 leaves r2 undefined, with a note.
Metrics evaluate(const std::vector<double>& predictions, const std::vector<double>& actuals);

void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace twinpipe
