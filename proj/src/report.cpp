#include "twinpipe/report.hpp"

#include "twinpipe/util.hpp"

namespace twinpipe {

namespace {

// Numbers in the markdown are printed exactly as they appear in the JSON.
std::string md_number(const json& v) { return v.is_null() ? std::string("n/a") : v.dump(); }

}  // namespace

Report generate_report(const ReportInputs& inputs) {
  if (inputs.metrics.n < 1) raise(Errc::empty_metrics, "metrics cover no samples");
  if (inputs.timestamps.size() != inputs.actual.size() ||
      inputs.timestamps.size() != inputs.predicted.size())
    raise(Errc::length_mismatch, "prediction series lengths differ");

  const json& ctx = inputs.run_context;
  json doc;
  doc["schema_version"] = 1;
  doc["title"] = ctx.value("title", std::string("model report"));
  doc["generated_at"] = ctx.value("generated_at", std::string(""));
  doc["metrics"] = inputs.metrics.to_json();
  doc["model"] = inputs.model_meta;
  json data;
  data["rows"] = inputs.timestamps.size();
  data["input_digests"] = ctx.contains("input_digests") ? ctx["input_digests"] : json::object();
  if (ctx.contains("train_rows")) data["train_rows"] = ctx["train_rows"];
  if (ctx.contains("test_rows")) data["test_rows"] = ctx["test_rows"];
  doc["data"] = data;
  doc["command"] = ctx.value("command", std::string(""));

  // Reapplication manifest: predict from the saved artifact, evaluate,
  // re-report. Itself a valid pipeline manifest when the paths are real.
  std::string model_path = ctx.value("model_path", std::string("model.json"));
  std::string source_data = ctx.value("source_data", std::string("<your-data.csv>"));
  json reapply;
  reapply["name"] = doc["title"].get<std::string>() + "-reapply";
  reapply["steps"] = json::array(
      {json{{"component", "predict"},
            {"params", ""},
            {"inputs", json::array({model_path, source_data})},
            {"outputs", json::array({"reapply/predictions.csv"})}},
       json{{"component", "evaluate"},
            {"params", ""},
            {"inputs", json::array({"reapply/predictions.csv"})},
            {"outputs", json::array({"reapply/metrics.json"})}},
       json{{"component", "report"},
            {"params", ""},
            {"inputs", json::array({model_path, "reapply/predictions.csv", "reapply/metrics.json"})},
            {"outputs", json::array({"reapply/report.json", "reapply/report.md"})}}});
  doc["reapply_manifest"] = reapply;

  json series;
  series["timestamp_ms"] = inputs.timestamps;
  json actual = json::array();
  json predicted = json::array();
  for (std::size_t i = 0; i < inputs.actual.size(); ++i) {
    actual.push_back(is_missing(inputs.actual[i]) ? json(nullptr) : json(inputs.actual[i]));
    predicted.push_back(is_missing(inputs.predicted[i]) ? json(nullptr) : json(inputs.predicted[i]));
  }
  series["actual"] = actual;
  series["predicted"] = predicted;
  doc["series"] = series;

  // ---- markdown rendering (values lifted verbatim from the JSON) ----
  std::string md;
  md += "# " + doc["title"].get<std::string>() + "\n\n";
  if (!doc["generated_at"].get<std::string>().empty())
    md += "Generated: " + doc["generated_at"].get<std::string>() + "\n\n";

  md += "## Metrics\n\n";
  md += "| metric | value |\n|---|---|\n";
  md += "| rmse | " + md_number(doc["metrics"]["rmse"]) + " |\n";
  md += "| mae | " + md_number(doc["metrics"]["mae"]) + " |\n";
  md += "| r2 | " + md_number(doc["metrics"]["r2"]) + " |\n";
  md += "| n | " + md_number(doc["metrics"]["n"]) + " |\n\n";
  if (doc["metrics"].contains("note"))
    md += "Note: " + doc["metrics"]["note"].get<std::string>() + "\n\n";

  md += "## Model\n\n";
  const json& model = doc["model"];
  if (model.contains("spec")) {
    const json& spec = model["spec"];
    md += "- kind: " + spec.value("kind", std::string("?")) + "\n";
    md += "- target: " + spec.value("target", std::string("?")) + "\n";
    std::string feats;
    if (spec.contains("features"))
      for (const auto& f : spec["features"]) {
        if (!feats.empty()) feats += ", ";
        feats += f.get<std::string>();
      }
    md += "- features: " + feats + "\n";
    if (spec.value("kind", std::string()) == "random_forest" && spec.contains("forest")) {
      const json& fo = spec["forest"];
      md += "- parameters: n_trees=" + md_number(fo["n_trees"]) +
            ", max_depth=" + md_number(fo["max_depth"]) +
            ", min_samples_leaf=" + md_number(fo["min_samples_leaf"]) +
            ", mtry=" + md_number(fo["mtry"]) + ", seed=" + md_number(fo["seed"]) + "\n";
    } else if (spec.contains("linear")) {
      md += "- parameters: ridge_epsilon=" + md_number(spec["linear"]["ridge_epsilon"]) + "\n";
    }
  }
  if (model.contains("metadata")) {
    md += "- trained on " + md_number(model["metadata"]["n_train"]) + " rows (" +
          md_number(model["metadata"]["rows_excluded"]) + " excluded as incomplete)\n";
  }
  if (model.contains("content_hash"))
    md += "- content hash: " + model["content_hash"].get<std::string>() + "\n";
  md += "\n";

  if (model.contains("metadata") && model["metadata"].contains("feature_ranges") &&
      !model["metadata"]["feature_ranges"].empty()) {
    md += "## Valid feature ranges observed in training\n\n";
    md += "| feature | min | max |\n|---|---|---|\n";
    for (auto it = model["metadata"]["feature_ranges"].begin();
         it != model["metadata"]["feature_ranges"].end(); ++it)
      md += "| " + it.key() + " | " + md_number(it.value()[0]) + " | " + md_number(it.value()[1]) +
            " |\n";
    md += "\n";
  }

  if (!data["input_digests"].empty()) {
    md += "## Inputs\n\n";
    md += "| file | digest |\n|---|---|\n";
    for (auto it = data["input_digests"].begin(); it != data["input_digests"].end(); ++it)
      md += "| " + it.key() + " | " + it.value().get<std::string>() + " |\n";
    md += "\n";
  }

  md += "## Reapplying this model\n\n";
  md += "Run the embedded manifest with the `run` subcommand after pointing\n";
  md += "`" + source_data + "` at the data to score:\n\n";
  md += "```json\n" + reapply.dump(2) + "\n```\n\n";

  md += "## Prediction series\n\n";
  md += "The full prediction-vs-actual series (" + std::to_string(inputs.timestamps.size()) +
        " rows) is in `report.json` under `series`, ready for plotting.\n";

  return {std::move(doc), std::move(md)};
}

}  // namespace twinpipe
