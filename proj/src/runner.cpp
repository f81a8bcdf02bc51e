#include "twinpipe/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <set>

#include "twinpipe/csv.hpp"
#include "twinpipe/error.hpp"
#include "twinpipe/ingest.hpp"
#include "twinpipe/model.hpp"
#include "twinpipe/quality.hpp"
#include "twinpipe/report.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/sha256.hpp"
#include "twinpipe/split.hpp"
#include "twinpipe/synth.hpp"
#include "twinpipe/util.hpp"

namespace fs = std::filesystem;

namespace twinpipe {

PipelineManifest PipelineManifest::from_json(const json& doc) {
  PipelineManifest m;
  try {
    m.name = doc.value("name", std::string("pipeline"));
    for (const auto& js : doc.at("steps")) {
      ManifestStep step;
      step.component = js.at("component").get<std::string>();
      step.params = js.value("params", std::string(""));
      if (js.contains("inputs"))
        for (const auto& p : js["inputs"]) step.inputs.push_back(p.get<std::string>());
      if (js.contains("outputs"))
        for (const auto& p : js["outputs"]) step.outputs.push_back(p.get<std::string>());
      step.skip = js.value("skip", false);
      m.steps.push_back(std::move(step));
    }
  } catch (const std::exception& e) {
    raise(Errc::unparseable_manifest, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

PipelineManifest PipelineManifest::load(const std::string& path) {
  if (!file_exists(path)) raise(Errc::file_not_found, "no such manifest: " + path);
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) raise(Errc::unparseable_manifest, "manifest is not valid JSON: " + path);
  return from_json(doc);
}

json PipelineManifest::to_json() const {
  json doc;
  doc["name"] = name;
  json js = json::array();
  for (const auto& step : steps) {
    json s;
    s["component"] = step.component;
    s["params"] = step.params;
    s["inputs"] = step.inputs;
    s["outputs"] = step.outputs;
    if (step.skip) s["skip"] = true;
    js.push_back(s);
  }
  doc["steps"] = js;
  return doc;
}

namespace {

std::string resolve(const std::string& path, const std::string& base) {
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base) / p).lexically_normal().string();
}

std::string iso_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

}  // namespace

json ValidationReport::to_json() const {
  json doc;
  doc["ok"] = ok();
  json list = json::array();
  for (const auto& v : violations)
    list.push_back({{"step", v.step}, {"kind", v.kind}, {"message", v.message}});
  doc["violations"] = list;
  return doc;
}

ValidationReport validate_manifest(const PipelineManifest& manifest, const std::string& workdir_in) {
  const std::string workdir = fs::absolute(workdir_in).lexically_normal().string();
  ValidationReport report;
  auto add = [&](int step, const std::string& kind, const std::string& message) {
    report.violations.push_back({step, kind, message});
  };

  if (manifest.steps.empty()) add(-1, "EmptyManifest", "manifest has no steps");

  std::set<std::string> produced;  // resolved outputs of earlier non-skipped steps
  std::set<std::string> all_outputs;

  for (std::size_t i = 0; i < manifest.steps.size(); ++i) {
    const ManifestStep& step = manifest.steps[i];
    const int idx = static_cast<int>(i);

    if (!components::known_component(step.component)) {
      add(idx, "UnknownComponent", "'" + step.component + "' is not a pipeline component");
      continue;
    }
    if (step.skip) continue;

    int want_in = 0, want_out = 0;
    components::expected_arity(step.component, want_in, want_out);
    if (want_in >= 0 && static_cast<int>(step.inputs.size()) != want_in)
      add(idx, "BadArity",
          step.component + " expects " + std::to_string(want_in) + " inputs, has " +
              std::to_string(step.inputs.size()));
    if (step.component == "report" && (step.inputs.size() < 2 || step.inputs.size() > 3))
      add(idx, "BadArity",
          "report expects model + predictions [+ metrics] inputs, has " +
              std::to_string(step.inputs.size()));
    if (want_out >= 0 && static_cast<int>(step.outputs.size()) != want_out)
      add(idx, "BadArity",
          step.component + " expects " + std::to_string(want_out) + " outputs, has " +
              std::to_string(step.outputs.size()));

    // params schema per component
    const bool needs_params = step.component == "merge" || step.component == "quality" ||
                              step.component == "split" || step.component == "train" ||
                              step.component == "generate";
    std::string params_path = step.params.empty() ? "" : resolve(step.params, workdir);
    if (needs_params && step.params.empty()) {
      add(idx, "MissingParams", step.component + " requires a params document");
    } else if (!step.params.empty()) {
      if (!file_exists(params_path)) {
        // params written by an earlier step can only be schema-checked at run time
        if (!produced.count(params_path))
          add(idx, "MissingParams", "params file not found: " + step.params);
      } else {
        try {
          if (step.component == "merge") {
            MergeSpec spec = MergeSpec::load(params_path);
            std::set<std::string> declared;
            for (const auto& in : step.inputs) declared.insert(resolve(in, workdir));
            for (const auto& src : spec.sources)
              if (!declared.count(resolve(src.path, workdir)))
                add(idx, "InputMismatch",
                    "merge spec reads '" + src.path + "' which is not a declared input");
          } else if (step.component == "quality") {
            QualitySpec::load(params_path);
          } else if (step.component == "split") {
            SplitSpec::load(params_path);
          } else if (step.component == "train") {
            ModelSpec::load(params_path);
          } else if (step.component == "generate") {
            ScenarioConfig config = ScenarioConfig::load(params_path);
            auto expected = scenario_files(config);
            if (step.outputs.size() != expected.size())
              add(idx, "BadArity",
                  "generate writes " + std::to_string(expected.size()) + " files, " +
                      std::to_string(step.outputs.size()) + " declared");
          } else if (step.component == "report") {
            load_json_file(params_path);
          }
        } catch (const std::exception& e) {
          add(idx, "ParamsInvalid", step.component + " params: " + e.what());
        }
      }
    }

    for (const auto& in : step.inputs) {
      std::string r = resolve(in, workdir);
      if (!produced.count(r) && !file_exists(r))
        add(idx, "DanglingInput",
            "input '" + in + "' is not produced by an earlier step and does not exist");
    }
    for (const auto& out : step.outputs) {
      std::string r = resolve(out, workdir);
      if (all_outputs.count(r))
        add(idx, "OutputCollision", "output '" + out + "' is written by more than one step");
      all_outputs.insert(r);
      produced.insert(r);
    }
  }
  return report;
}

// ------------------------------------------------------------ components --

namespace components {

namespace {

struct ComponentInfo {
  const char* name;
  const char* version;
  int inputs;   // -1 variable
  int outputs;
};

constexpr ComponentInfo kComponents[] = {
    {"merge", "1.0.0", -1, 2},   {"quality", "1.0.0", 1, 2},  {"split", "1.0.0", 1, 2},
    {"train", "1.0.0", 2, 2},    {"predict", "1.0.0", 2, 1},  {"evaluate", "1.0.0", 1, 1},
    {"report", "1.0.0", -1, 2},  {"generate", "1.0.0", 0, -1},
};

const ComponentInfo* find_component(const std::string& name) {
  for (const auto& c : kComponents)
    if (name == c.name) return &c;
  return nullptr;
}

// predictions CSV contract: timestamp_ms, actual, predicted, usable
void write_predictions_csv(const std::string& path, const TimeTable& table,
                           const std::string& target, const PredictResult& result) {
  std::string out = "timestamp_ms,actual,predicted,usable\n";
  int target_idx = table.column_index(target);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    out += std::to_string(table.timestamps()[r]);
    out += ',';
    if (target_idx >= 0) {
      double a = table.columns()[static_cast<std::size_t>(target_idx)].values[r];
      if (!is_missing(a)) out += format_double(a);
    }
    out += ',';
    if (!is_missing(result.values[r])) out += format_double(result.values[r]);
    out += result.usable[r] ? ",1\n" : ",0\n";
  }
  atomic_write_file(path, out);
}

void read_predictions_csv(const std::string& path, std::vector<Timestamp>& ts,
                          std::vector<double>& actual, std::vector<double>& predicted) {
  TimeTable t = read_table_csv(path);
  if (!t.has_column("actual") || !t.has_column("predicted"))
    raise(Errc::missing_column, path + ": not a predictions file");
  ts = t.timestamps();
  actual = t.column("actual").values;
  predicted = t.column("predicted").values;
}

void component_merge(const Invocation& inv) {
  MergeSpec spec = MergeSpec::load(inv.params_path);
  std::vector<std::string> spec_paths;
  for (auto& src : spec.sources) {
    spec_paths.push_back(src.path);
    src.path = resolve(src.path, inv.base_dir);
  }
  MergeResult result = merge_sources(spec);
  // the report names sources as the spec wrote them, so identical runs in
  // different directories emit identical bytes
  for (std::size_t i = 0; i < spec_paths.size(); ++i)
    result.report["sources"][i]["path"] = spec_paths[i];
  write_table_csv(inv.outputs.at(0), result.table);
  atomic_write_file(inv.outputs.at(1), dump_json(result.report));
}

void component_quality(const Invocation& inv) {
  QualitySpec spec =
      inv.params_path.empty() ? QualitySpec{} : QualitySpec::load(inv.params_path);
  TimeTable table = read_table_csv(inv.inputs.at(0));
  QualityResult result = quality_check(table, spec);
  write_table_csv(inv.outputs.at(0), result.table);
  atomic_write_file(inv.outputs.at(1), dump_json(result.report.to_json()));
}

void component_split(const Invocation& inv) {
  SplitSpec spec = SplitSpec::load(inv.params_path);
  TimeTable table = read_table_csv(inv.inputs.at(0));
  SplitResult result = split(table, spec);
  write_table_csv(inv.outputs.at(0), result.train);
  write_table_csv(inv.outputs.at(1), result.test);
}

void component_train(const Invocation& inv) {
  ModelSpec spec = ModelSpec::load(inv.params_path);
  TimeTable train_table = read_table_csv(inv.inputs.at(0));
  TimeTable test_table = read_table_csv(inv.inputs.at(1));
  ModelArtifact artifact = spec.kind == ModelSpec::Kind::linear ? fit_linear(train_table, spec)
                                                                : fit_forest(train_table, spec);
  save_model(artifact, inv.outputs.at(0));
  PredictResult predictions = predict(artifact, test_table);
  write_predictions_csv(inv.outputs.at(1), test_table, spec.target, predictions);
}

void component_predict(const Invocation& inv) {
  ModelArtifact artifact = load_model(inv.inputs.at(0));
  TimeTable table = read_table_csv(inv.inputs.at(1));
  PredictResult predictions = predict(artifact, table);
  write_predictions_csv(inv.outputs.at(0), table, artifact.spec.target, predictions);
}

void component_evaluate(const Invocation& inv) {
  std::vector<Timestamp> ts;
  std::vector<double> actual, predicted;
  read_predictions_csv(inv.inputs.at(0), ts, actual, predicted);
  Metrics metrics = evaluate(predicted, actual);
  atomic_write_file(inv.outputs.at(0), dump_json(metrics.to_json()));
}

void component_report(const Invocation& inv) {
  ReportInputs in;
  ModelArtifact artifact = load_model(inv.inputs.at(0));
  read_predictions_csv(inv.inputs.at(1), in.timestamps, in.actual, in.predicted);
  if (inv.inputs.size() >= 3) {
    json mj = load_json_file(inv.inputs.at(2));
    in.metrics.rmse = mj.value("rmse", 0.0);
    in.metrics.mae = mj.value("mae", 0.0);
    in.metrics.r2_defined = mj.contains("r2") && !mj["r2"].is_null();
    in.metrics.r2 = in.metrics.r2_defined ? mj["r2"].get<double>() : 0.0;
    in.metrics.n = mj.value("n", std::size_t{0});
    in.metrics.note = mj.value("note", std::string(""));
  } else {
    in.metrics = evaluate(in.predicted, in.actual);
  }

  json meta = artifact.to_json();
  meta.erase("payload");  // the report carries model metadata, not the weights
  in.model_meta = meta;

  json ctx = inv.params_path.empty() ? json::object() : load_json_file(inv.params_path);
  json digests;
  for (const auto& input : inv.inputs)
    digests[fs::path(input).filename().string()] = sha256_file(input);
  ctx["input_digests"] = digests;
  // paths land in the report relative to the workdir so reruns in different
  // directories stay byte-identical
  auto portable = [&](const std::string& path) {
    fs::path rel = fs::proximate(resolve(path, inv.base_dir), inv.base_dir);
    std::string s = rel.generic_string();
    if (s.rfind("..", 0) == 0) return fs::path(resolve(path, inv.base_dir)).generic_string();
    return s;
  };
  ctx["model_path"] = portable(inv.inputs.at(0));
  if (!ctx.contains("source_data") || ctx["source_data"].get<std::string>().empty())
    ctx["source_data"] = "<your-data.csv>";
  else
    ctx["source_data"] = portable(ctx["source_data"].get<std::string>());
  in.run_context = ctx;

  Report report = generate_report(in);
  atomic_write_file(inv.outputs.at(0), dump_json(report.machine));
  atomic_write_file(inv.outputs.at(1), report.markdown);
}

void component_generate(const Invocation& inv) {
  ScenarioConfig config = ScenarioConfig::load(inv.params_path);
  config.out_dir = resolve(config.out_dir, inv.base_dir);
  generate(config);
}

}  // namespace

bool known_component(const std::string& name) { return find_component(name) != nullptr; }

const char* component_version(const std::string& name) {
  const ComponentInfo* c = find_component(name);
  return c ? c->version : "unknown";
}

json all_component_versions() {
  json doc;
  for (const auto& c : kComponents) doc[c.name] = c.version;
  return doc;
}

void expected_arity(const std::string& name, int& inputs, int& outputs) {
  const ComponentInfo* c = find_component(name);
  if (!c) raise(Errc::invalid_argument, "unknown component '" + name + "'");
  inputs = c->inputs;
  outputs = c->outputs;
}

void run_component(const std::string& name, const Invocation& invocation) {
  if (name == "merge") return component_merge(invocation);
  if (name == "quality") return component_quality(invocation);
  if (name == "split") return component_split(invocation);
  if (name == "train") return component_train(invocation);
  if (name == "predict") return component_predict(invocation);
  if (name == "evaluate") return component_evaluate(invocation);
  if (name == "report") return component_report(invocation);
  if (name == "generate") return component_generate(invocation);
  raise(Errc::invalid_argument, "unknown component '" + name + "'");
}

}  // namespace components

// ---------------------------------------------------------------- runner --

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

std::string subprocess_command(const std::string& cli, const std::string& component,
                               const components::Invocation& inv) {
  std::vector<std::string> argv = {cli, component == "quality" ? "qc" : component};
  auto add = [&](const std::string& flag, const std::string& value) {
    argv.push_back(flag);
    argv.push_back(value);
  };
  if (component == "merge") {
    add("--params", inv.params_path);
    add("--out-csv", inv.outputs.at(0));
    add("--out-report", inv.outputs.at(1));
    add("--base-dir", inv.base_dir);
  } else if (component == "quality") {
    if (!inv.params_path.empty()) add("--params", inv.params_path);
    add("--in", inv.inputs.at(0));
    add("--out-csv", inv.outputs.at(0));
    add("--out-report", inv.outputs.at(1));
  } else if (component == "split") {
    add("--params", inv.params_path);
    add("--in", inv.inputs.at(0));
    add("--out-train", inv.outputs.at(0));
    add("--out-test", inv.outputs.at(1));
  } else if (component == "train") {
    add("--params", inv.params_path);
    add("--train", inv.inputs.at(0));
    add("--test", inv.inputs.at(1));
    add("--out-model", inv.outputs.at(0));
    add("--out-predictions", inv.outputs.at(1));
  } else if (component == "predict") {
    add("--model", inv.inputs.at(0));
    add("--in", inv.inputs.at(1));
    add("--out", inv.outputs.at(0));
  } else if (component == "evaluate") {
    add("--in", inv.inputs.at(0));
    add("--out", inv.outputs.at(0));
  } else if (component == "report") {
    if (!inv.params_path.empty()) add("--params", inv.params_path);
    add("--model", inv.inputs.at(0));
    add("--predictions", inv.inputs.at(1));
    if (inv.inputs.size() >= 3) add("--metrics", inv.inputs.at(2));
    add("--out-json", inv.outputs.at(0));
    add("--out-md", inv.outputs.at(1));
    add("--base-dir", inv.base_dir);
  } else if (component == "generate") {
    add("--params", inv.params_path);
    add("--base-dir", inv.base_dir);
  }
  std::string cmd;
  for (const auto& a : argv) {
    if (!cmd.empty()) cmd += ' ';
    cmd += shell_quote(a);
  }
  return cmd;
}

}  // namespace

json run_pipeline(const PipelineManifest& manifest, const std::string& workdir_in,
                  const RunOptions& options) {
  // one canonical absolute base keeps every resolved path, digest key and
  // report-relative path consistent no matter where the caller stood
  const std::string workdir = fs::absolute(workdir_in).lexically_normal().string();
  ValidationReport validation = validate_manifest(manifest, workdir);
  if (!validation.ok()) {
    std::string msg = "manifest validation failed:";
    for (const auto& v : validation.violations)
      msg += "\n  step " + std::to_string(v.step) + " [" + v.kind + "] " + v.message;
    raise(Errc::validation_failed, msg);
  }

  std::error_code ec;
  fs::create_directories(workdir, ec);
  {
    std::string probe = (fs::path(workdir) / ".twinpipe_probe").string();
    try {
      atomic_write_file(probe, "ok");
    } catch (const Error&) {
      raise(Errc::workdir_not_writable, "cannot write to workdir: " + workdir);
    }
    fs::remove(probe, ec);
  }

  json record;
  record["schema_version"] = 1;
  record["name"] = manifest.name;
  record["manifest_digest"] = digest_string(dump_json(manifest.to_json()));
  record["digest_algorithm"] = "sha256";
  record["prng"] = kPrngName;
  record["exec_mode"] = options.exec == RunOptions::Exec::inprocess ? "inprocess" : "subprocess";
  record["component_versions"] = components::all_component_versions();
  record["status"] = "running";
  record["steps"] = json::array();

  const std::string record_path = (fs::path(workdir) / "run_record.json").string();
  auto flush_record = [&]() { atomic_write_file(record_path, dump_json(record)); };
  flush_record();

  // producer digest per resolved path, for staleness checks at the consumer
  std::map<std::string, std::string> produced_digest;
  bool failed = false;

  for (std::size_t i = 0; i < manifest.steps.size() && !failed; ++i) {
    const ManifestStep& step = manifest.steps[i];
    if (options.before_step) options.before_step(i);
    json js;
    js["index"] = i;
    js["component"] = step.component;
    js["component_version"] = components::component_version(step.component);
    if (step.skip) {
      js["status"] = "skipped";
      record["steps"].push_back(js);
      flush_record();
      continue;
    }

    js["started"] = iso_now();

    components::Invocation inv;
    inv.base_dir = workdir;
    if (!step.params.empty()) inv.params_path = resolve(step.params, workdir);
    for (const auto& in : step.inputs) inv.inputs.push_back(resolve(in, workdir));
    for (const auto& out : step.outputs) inv.outputs.push_back(resolve(out, workdir));
    if (step.component == "generate") {
      // outputs are produced relative to the scenario's out_dir
      ScenarioConfig config = ScenarioConfig::load(inv.params_path);
      std::string base = resolve(config.out_dir, workdir);
      inv.outputs.clear();
      for (const auto& f : scenario_files(config)) inv.outputs.push_back(resolve(f, base));
    }

    std::string error_message;
    try {
      if (!inv.params_path.empty()) js["params_digest"] = sha256_file(inv.params_path);
      json inputs_json;
      for (const auto& in : inv.inputs) {
        if (!file_exists(in))
          raise(Errc::step_failed, "input missing at execution time: " + in);
        std::string digest = sha256_file(in);
        auto it = produced_digest.find(in);
        if (it != produced_digest.end() && it->second != digest)
          raise(Errc::step_failed, "input '" + in +
                                       "' does not match the digest its producing step recorded "
                                       "(file changed between steps)");
        inputs_json[in] = digest;
      }
      js["inputs"] = inputs_json;

      if (options.exec == RunOptions::Exec::inprocess) {
        components::run_component(step.component, inv);
      } else {
        if (options.cli_path.empty())
          raise(Errc::invalid_argument, "subprocess mode needs the CLI path");
        std::string cmd = subprocess_command(options.cli_path, step.component, inv);
        int rc = std::system(cmd.c_str());
        if (rc != 0)
          raise(Errc::step_failed,
                step.component + " subprocess exited with status " + std::to_string(rc));
      }

      json outputs_json;
      for (const auto& out : inv.outputs) {
        if (!file_exists(out))
          raise(Errc::step_failed, step.component + " did not produce declared output: " + out);
        std::string digest = sha256_file(out);
        outputs_json[out] = digest;
        produced_digest[out] = digest;
      }
      js["outputs"] = outputs_json;
      js["status"] = "ok";
    } catch (const std::exception& e) {
      js["status"] = "failed";
      js["error"] = e.what();
      error_message = e.what();
      failed = true;
    }

    js["ended"] = iso_now();
    record["steps"].push_back(js);
    flush_record();

    if (failed) {
      record["status"] = "failed";
      flush_record();
      raise(Errc::step_failed, "step " + std::to_string(i) + " (" + step.component +
                                   ") failed: " + error_message);
    }
  }

  record["status"] = "ok";
  flush_record();
  return record;
}

}  // namespace twinpipe
