#include <algorithm>
#include <cmath>

#include "twinpipe/model.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/sha256.hpp"
#include "twinpipe/util.hpp"

namespace twinpipe {

ModelSpec ModelSpec::from_json(const json& doc) {
  ModelSpec spec;
  std::string kind = doc.at("kind").get<std::string>();
  if (kind == "linear")
    spec.kind = Kind::linear;
  else if (kind == "random_forest")
    spec.kind = Kind::random_forest;
  else
    raise(Errc::invalid_argument, "unknown model kind '" + kind + "'");
  spec.target = doc.at("target").get<std::string>();
  for (const auto& f : doc.at("features")) spec.features.push_back(f.get<std::string>());
  if (spec.features.empty()) raise(Errc::invalid_argument, "model needs features");
  for (const auto& f : spec.features)
    if (f == spec.target)
      raise(Errc::invalid_argument, "target '" + spec.target + "' cannot also be a feature");

  if (doc.contains("forest")) {
    const auto& fj = doc["forest"];
    spec.forest.n_trees = fj.value("n_trees", 100);
    if (fj.contains("max_depth") && !fj["max_depth"].is_null())
      spec.forest.max_depth = fj["max_depth"].get<int>();
    spec.forest.min_samples_leaf = fj.value("min_samples_leaf", 5);
    if (fj.contains("mtry") && !fj["mtry"].is_null()) spec.forest.mtry = fj["mtry"].get<int>();
    spec.forest.seed = fj.value("seed", std::uint64_t{0});
  }
  if (doc.contains("linear")) spec.linear.ridge_epsilon = doc["linear"].value("ridge_epsilon", 1e-8);

  if (spec.forest.n_trees < 1) raise(Errc::invalid_argument, "n_trees must be >= 1");
  if (spec.forest.min_samples_leaf < 1)
    raise(Errc::invalid_argument, "min_samples_leaf must be >= 1");
  if (spec.forest.mtry &&
      (*spec.forest.mtry < 1 || *spec.forest.mtry > static_cast<int>(spec.features.size())))
    raise(Errc::invalid_argument, "mtry out of range");
  return spec;
}

ModelSpec ModelSpec::load(const std::string& path) { return from_json(load_json_file(path)); }

json ModelSpec::to_json() const {
  json doc;
  doc["kind"] = kind == Kind::linear ? "linear" : "random_forest";
  doc["target"] = target;
  doc["features"] = features;
  json fj;
  fj["n_trees"] = forest.n_trees;
  fj["max_depth"] = forest.max_depth ? json(*forest.max_depth) : json(nullptr);
  fj["min_samples_leaf"] = forest.min_samples_leaf;
  fj["mtry"] = forest.mtry ? json(*forest.mtry) : json(nullptr);
  fj["seed"] = forest.seed;
  doc["forest"] = fj;
  doc["linear"] = {{"ridge_epsilon", linear.ridge_epsilon}};
  return doc;
}

namespace {

json artifact_body(const ModelArtifact& a) {
  json doc;
  doc["schema_version"] = 1;
  doc["spec"] = a.spec.to_json();
  if (a.spec.kind == ModelSpec::Kind::linear) {
    json payload;
    payload["intercept"] = a.intercept;
    payload["coefficients"] = a.coefficients;
    doc["payload"] = payload;
  } else {
    json trees = json::array();
    for (const auto& tree : a.trees) {
      json nodes = json::array();
      for (const auto& node : tree.nodes) {
        if (node.is_leaf())
          nodes.push_back({{"v", node.leaf_value}});
        else
          nodes.push_back(
              {{"f", node.feature}, {"t", node.threshold}, {"l", node.left}, {"r", node.right}});
      }
      trees.push_back({{"nodes", nodes}});
    }
    doc["payload"] = {{"trees", trees}};
  }
  json meta;
  meta["n_train"] = a.n_train;
  meta["rows_excluded"] = a.rows_excluded;
  meta["ridge_applied"] = a.ridge_applied;
  meta["prng"] = kPrngName;
  meta["seed_rule"] = "seed XOR tree_index";
  meta["feature_units"] = a.feature_units;
  json ranges;
  for (const auto& [name, range] : a.feature_ranges)
    ranges[name] = {range.first, range.second};
  meta["feature_ranges"] = ranges;
  meta["trained_at"] = a.trained_at;
  doc["metadata"] = meta;
  return doc;
}

}  // namespace

std::string ModelArtifact::content_hash() const {
  return digest_string(dump_json(artifact_body(*this)));
}

json ModelArtifact::to_json() const {
  json doc = artifact_body(*this);
  doc["content_hash"] = content_hash();
  return doc;
}

ModelArtifact ModelArtifact::from_json(const json& doc) {
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    raise(Errc::corrupt_artifact, "model artifact missing schema_version");
  if (doc["schema_version"].get<int>() != 1)
    raise(Errc::unsupported_schema_version,
          "unsupported model schema version " + doc["schema_version"].dump());

  ModelArtifact a;
  try {
    a.spec = ModelSpec::from_json(doc.at("spec"));
    const auto& payload = doc.at("payload");
    if (a.spec.kind == ModelSpec::Kind::linear) {
      a.intercept = payload.at("intercept").get<double>();
      for (const auto& c : payload.at("coefficients")) a.coefficients.push_back(c.get<double>());
      if (a.coefficients.size() != a.spec.features.size())
        raise(Errc::corrupt_artifact, "coefficient count does not match feature list");
    } else {
      for (const auto& jt : payload.at("trees")) {
        Tree tree;
        for (const auto& jn : jt.at("nodes")) {
          TreeNode node;
          if (jn.contains("v")) {
            node.leaf_value = jn["v"].get<double>();
          } else {
            node.feature = jn.at("f").get<int>();
            node.threshold = jn.at("t").get<double>();
            node.left = jn.at("l").get<int>();
            node.right = jn.at("r").get<int>();
            if (!std::isfinite(node.threshold))
              raise(Errc::corrupt_artifact, "non-finite split threshold");
          }
          tree.nodes.push_back(node);
        }
        if (tree.nodes.empty()) raise(Errc::corrupt_artifact, "empty tree");
        for (const auto& node : tree.nodes) {
          if (node.is_leaf()) continue;
          auto bad = [&](int child) {
            return child < 0 || child >= static_cast<int>(tree.nodes.size());
          };
          if (bad(node.left) || bad(node.right))
            raise(Errc::corrupt_artifact, "tree child index out of range");
          if (node.feature >= static_cast<int>(a.spec.features.size()))
            raise(Errc::corrupt_artifact, "tree feature index out of range");
        }
        a.trees.push_back(std::move(tree));
      }
      if (static_cast<int>(a.trees.size()) != a.spec.forest.n_trees)
        raise(Errc::corrupt_artifact, "tree count does not match spec");
    }
    const auto& meta = doc.at("metadata");
    a.n_train = meta.value("n_train", std::size_t{0});
    a.rows_excluded = meta.value("rows_excluded", std::size_t{0});
    a.ridge_applied = meta.value("ridge_applied", false);
    if (meta.contains("feature_units"))
      for (auto it = meta["feature_units"].begin(); it != meta["feature_units"].end(); ++it)
        a.feature_units[it.key()] = it.value().get<std::string>();
    if (meta.contains("feature_ranges"))
      for (auto it = meta["feature_ranges"].begin(); it != meta["feature_ranges"].end(); ++it)
        a.feature_ranges[it.key()] = {it.value().at(0).get<double>(),
                                      it.value().at(1).get<double>()};
    a.trained_at = meta.value("trained_at", "");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::corrupt_artifact, std::string("malformed model artifact: ") + e.what());
  }

  if (!doc.contains("content_hash") ||
      doc["content_hash"].get<std::string>() != a.content_hash())
    raise(Errc::corrupt_artifact, "content hash mismatch");
  return a;
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  save_json_file(path, artifact.to_json());
}

ModelArtifact load_model(const std::string& path) {
  if (!file_exists(path)) raise(Errc::file_not_found, "no such file: " + path);
  std::string text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) raise(Errc::corrupt_artifact, "model artifact is not valid JSON: " + path);
  return ModelArtifact::from_json(doc);
}

PredictResult predict(const ModelArtifact& model, const TimeTable& table) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& f : model.spec.features) {
    int idx = table.column_index(f);
    if (idx < 0) raise(Errc::missing_feature_column, "feature column '" + f + "' not in table");
    const auto& col = table.columns()[static_cast<std::size_t>(idx)];
    auto unit_it = model.feature_units.find(f);
    if (unit_it != model.feature_units.end() && !col.unit.empty() && col.unit != unit_it->second)
      raise(Errc::model_table_schema_mismatch, "feature '" + f + "' trained in '" +
                                                   unit_it->second + "' but table provides '" +
                                                   col.unit + "'");
    cols.push_back(&col.values);
  }

  const std::size_t n = table.row_count();
  PredictResult result;
  result.values.assign(n, missing());

  // The parallel loop touches only values[] (one double per row);
  // vector<bool> packs bits, so the usable flags are derived serially after.
  const std::int64_t rows = static_cast<std::int64_t>(n);
#ifdef _OPENMP
#pragma omp parallel for
#endif
  for (std::int64_t r = 0; r < rows; ++r) {
    std::size_t row = static_cast<std::size_t>(r);
    bool ok = true;
    for (const auto* col : cols)
      if (is_missing((*col)[row])) {
        ok = false;
        break;
      }
    if (!ok) continue;
    if (model.spec.kind == ModelSpec::Kind::linear) {
      double acc = model.intercept;
      for (std::size_t j = 0; j < cols.size(); ++j)
        acc += model.coefficients[j] * (*cols[j])[row];
      result.values[row] = acc;
    } else {
      // anchored mean: identical single-leaf trees stay exact
      double first = model.trees.front().predict_row(cols, row);
      double acc = 0.0;
      for (const auto& tree : model.trees) acc += tree.predict_row(cols, row) - first;
      result.values[row] = first + acc / static_cast<double>(model.trees.size());
    }
  }
  result.usable.assign(n, false);
  for (std::size_t row = 0; row < n; ++row) result.usable[row] = !is_missing(result.values[row]);
  return result;
}

Metrics evaluate(const std::vector<double>& predictions, const std::vector<double>& actuals) {
  if (predictions.size() != actuals.size())
    raise(Errc::length_mismatch, "predictions and actuals differ in length");

  std::vector<double> p, a;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (is_missing(predictions[i]) || is_missing(actuals[i])) continue;
    p.push_back(predictions[i]);
    a.push_back(actuals[i]);
  }
  if (p.empty()) raise(Errc::no_comparable_pairs, "no rows where both sides are present");

  const std::size_t n = p.size();
  double sse = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = p[i] - a[i];
    sse += e * e;
    abs_sum += std::fabs(e);
  }
  double anchor = a[0], s1 = 0.0;
  for (double v : a) s1 += v - anchor;
  double mean_a = anchor + s1 / static_cast<double>(n);
  double sst = 0.0;
  for (double v : a) sst += (v - mean_a) * (v - mean_a);

  Metrics m;
  m.n = n;
  m.rmse = std::sqrt(sse / static_cast<double>(n));
  m.mae = abs_sum / static_cast<double>(n);
  if (sst > 0.0) {
    m.r2 = 1.0 - sse / sst;
  } else if (sse == 0.0) {
    m.r2 = 1.0;  // constant actuals predicted perfectly
  } else {
    m.r2_defined = false;
    m.note = "r2 undefined: actuals have zero variance but errors are non-zero";
  }
  return m;
}

json Metrics::to_json() const {
  json doc;
  doc["rmse"] = rmse;
  doc["mae"] = mae;
  doc["r2"] = r2_defined ? json(r2) : json(nullptr);
  doc["n"] = n;
  if (!note.empty()) doc["note"] = note;
  return doc;
}

}  // namespace twinpipe
