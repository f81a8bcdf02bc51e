#include <doctest.h>

#include <filesystem>

#include "twinpipe/csv.hpp"
#include "twinpipe/model.hpp"
#include "twinpipe/report.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/runner.hpp"
#include "twinpipe/sha256.hpp"
#include "twinpipe/synth.hpp"
#include "twinpipe/util.hpp"

using namespace twinpipe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("twinpipe_") + tag + "_" +
                                        std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(path, ec);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

ReportInputs sample_report_inputs() {
  ReportInputs in;
  in.metrics.rmse = 1.5;
  in.metrics.mae = 1.0;
  in.metrics.r2 = 0.9;
  in.metrics.n = 10;
  in.model_meta = {{"spec", {{"kind", "linear"}, {"target", "y"},
                             {"features", json::array({"x"})},
                             {"linear", {{"ridge_epsilon", 1e-8}}}}},
                   {"metadata", {{"n_train", 50}, {"rows_excluded", 0}}},
                   {"content_hash", "sha256:feed"}};
  for (int i = 0; i < 10; ++i) {
    in.timestamps.push_back(i * 1000);
    in.actual.push_back(static_cast<double>(i));
    in.predicted.push_back(static_cast<double>(i) + 0.1);
  }
  in.run_context = {{"title", "sample"}, {"generated_at", "run-0"}};
  return in;
}

void generate_mussel_into(const fs::path& dir, std::uint64_t seed) {
  ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::mussel);
  config.seed = seed;
  config.out_dir = dir.string();
  generate(config);
}

}  // namespace

TEST_CASE("report markdown carries the metric values verbatim") {
  Report report = generate_report(sample_report_inputs());
  CHECK(report.markdown.find("| rmse | 1.5 |") != std::string::npos);
  CHECK(report.markdown.find("| mae | 1.0 |") != std::string::npos);
  CHECK(report.markdown.find("| r2 | 0.9 |") != std::string::npos);
  CHECK(report.machine["metrics"]["rmse"].get<double>() == 1.5);
}

TEST_CASE("identical inputs give byte-identical reports") {
  Report a = generate_report(sample_report_inputs());
  Report b = generate_report(sample_report_inputs());
  CHECK(dump_json(a.machine) == dump_json(b.machine));
  CHECK(a.markdown == b.markdown);
}

TEST_CASE("the embedded reapplication manifest is a valid pipeline manifest") {
  TempDir dir("reapply");
  ReportInputs in = sample_report_inputs();
  std::string model_path = (dir.path / "model.json").string();
  std::string data_path = (dir.path / "test.csv").string();
  atomic_write_file(model_path, "{}");
  atomic_write_file(data_path, "timestamp_ms,x\n0,1\n");
  in.run_context["model_path"] = model_path;
  in.run_context["source_data"] = data_path;
  Report report = generate_report(in);
  PipelineManifest manifest = PipelineManifest::from_json(report.machine["reapply_manifest"]);
  ValidationReport validation = validate_manifest(manifest, dir.path.string());
  for (const auto& v : validation.violations) MESSAGE(v.kind, ": ", v.message);
  CHECK(validation.ok());
}

TEST_CASE("empty metrics are rejected") {
  ReportInputs in = sample_report_inputs();
  in.metrics.n = 0;
  CHECK_THROWS_AS(generate_report(in), Error);
}

TEST_CASE("report JSON satisfies the published schema") {
  Report report = generate_report(sample_report_inputs());
  const json& doc = report.machine;
  CHECK(doc["schema_version"].get<int>() == 1);
  for (const char* key : {"title", "generated_at", "metrics", "model", "data", "command",
                          "reapply_manifest", "series"})
    CHECK(doc.contains(key));
  for (const char* key : {"rmse", "mae", "r2", "n"}) CHECK(doc["metrics"].contains(key));
  const json& series = doc["series"];
  CHECK(series["timestamp_ms"].size() == series["actual"].size());
  CHECK(series["timestamp_ms"].size() == series["predicted"].size());
  // every number rendered into the markdown exists in the JSON
  CHECK(report.markdown.find(doc["metrics"]["rmse"].dump()) != std::string::npos);
  CHECK(report.markdown.find(doc["metrics"]["mae"].dump()) != std::string::npos);
}

TEST_CASE("the canonical five-step manifest validates cleanly") {
  TempDir dir("canonical");
  generate_mussel_into(dir.path, 5);
  PipelineManifest manifest = PipelineManifest::load((dir.path / "pipeline_linear.json").string());
  ValidationReport validation = validate_manifest(manifest, dir.path.string());
  for (const auto& v : validation.violations) MESSAGE(v.kind, ": ", v.message);
  CHECK(validation.ok());
  CHECK(manifest.steps.size() == 5);
}

TEST_CASE("a predict-only manifest omitting split is valid") {
  TempDir dir("predictonly");
  atomic_write_file((dir.path / "model.json").string(), "{}");
  atomic_write_file((dir.path / "new.csv").string(), "timestamp_ms,x\n0,1\n");
  json manifest_json = {
      {"name", "predict-only"},
      {"steps", json::array(
                    {json{{"component", "predict"},
                          {"inputs", json::array({"model.json", "new.csv"})},
                          {"outputs", json::array({"p.csv"})}},
                     json{{"component", "evaluate"},
                          {"inputs", json::array({"p.csv"})},
                          {"outputs", json::array({"m.json"})}},
                     json{{"component", "report"},
                          {"inputs", json::array({"model.json", "p.csv", "m.json"})},
                          {"outputs", json::array({"r.json", "r.md"})}}})}};
  PipelineManifest manifest = PipelineManifest::from_json(manifest_json);
  ValidationReport validation = validate_manifest(manifest, dir.path.string());
  for (const auto& v : validation.violations) MESSAGE(v.kind, ": ", v.message);
  CHECK(validation.ok());
}

TEST_CASE("dangling inputs, unknown components and collisions are all reported") {
  json manifest_json = {
      {"name", "broken"},
      {"steps", json::array(
                    {json{{"component", "quality"},
                          {"params", ""},
                          {"inputs", json::array({"never_made.csv"})},
                          {"outputs", json::array({"out.csv", "rep.json"})}},
                     json{{"component", "frobnicate"},
                          {"inputs", json::array()},
                          {"outputs", json::array()}},
                     json{{"component", "evaluate"},
                          {"inputs", json::array({"also_missing.csv"})},
                          {"outputs", json::array({"out.csv"})}}})}};
  PipelineManifest manifest = PipelineManifest::from_json(manifest_json);
  ValidationReport validation = validate_manifest(manifest, "/tmp");
  CHECK_FALSE(validation.ok());
  bool dangling = false, unknown = false, collision = false, missing_params = false;
  for (const auto& v : validation.violations) {
    if (v.kind == "DanglingInput") dangling = true;
    if (v.kind == "UnknownComponent") unknown = true;
    if (v.kind == "OutputCollision") collision = true;
    if (v.kind == "MissingParams") missing_params = true;
  }
  CHECK(dangling);
  CHECK(unknown);
  CHECK(collision);
  CHECK(missing_params);  // quality step declared no params
}

TEST_CASE("run_pipeline executes end to end with full provenance") {
  TempDir dir("run");
  generate_mussel_into(dir.path, 11);
  PipelineManifest manifest = PipelineManifest::load((dir.path / "pipeline_linear.json").string());
  json record = run_pipeline(manifest, dir.path.string());
  CHECK(record["status"] == "ok");
  REQUIRE(record["steps"].size() == 5);
  for (const auto& step : record["steps"]) {
    CHECK(step["status"] == "ok");
    CHECK(step.contains("outputs"));
    for (auto it = step["outputs"].begin(); it != step["outputs"].end(); ++it)
      CHECK(it.value().get<std::string>().rfind("sha256:", 0) == 0);
  }
  CHECK(file_exists((dir.path / "run_record.json").string()));
  CHECK(file_exists((dir.path / "work/report.md").string()));

  // provenance completeness: consumed digests match their producers'
  std::map<std::string, std::string> produced;
  for (const auto& step : record["steps"])
    for (auto it = step["outputs"].begin(); it != step["outputs"].end(); ++it)
      produced[it.key()] = it.value().get<std::string>();
  for (const auto& step : record["steps"])
    for (auto it = step["inputs"].begin(); it != step["inputs"].end(); ++it)
      if (produced.count(it.key())) CHECK(produced[it.key()] == it.value().get<std::string>());
}

TEST_CASE("rerunning a manifest reproduces every output digest") {
  TempDir dir1("rerun1");
  TempDir dir2("rerun2");
  generate_mussel_into(dir1.path, 21);
  generate_mussel_into(dir2.path, 21);
  json r1 = run_pipeline(PipelineManifest::load((dir1.path / "pipeline_linear.json").string()),
                         dir1.path.string());
  json r2 = run_pipeline(PipelineManifest::load((dir2.path / "pipeline_linear.json").string()),
                         dir2.path.string());
  REQUIRE(r1["steps"].size() == r2["steps"].size());
  for (std::size_t i = 0; i < r1["steps"].size(); ++i) {
    auto o1 = r1["steps"][i]["outputs"];
    auto o2 = r2["steps"][i]["outputs"];
    REQUIRE(o1.size() == o2.size());
    auto it1 = o1.begin();
    auto it2 = o2.begin();
    for (; it1 != o1.end(); ++it1, ++it2) {
      CHECK(fs::path(it1.key()).filename() == fs::path(it2.key()).filename());
      CHECK(it1.value().get<std::string>() == it2.value().get<std::string>());
    }
  }
}

TEST_CASE("corrupting the merged CSV between steps trips the digest guard") {
  TempDir dir("corrupt");
  generate_mussel_into(dir.path, 31);
  PipelineManifest manifest = PipelineManifest::load((dir.path / "pipeline_linear.json").string());
  RunOptions options;
  options.before_step = [&](std::size_t step_index) {
    if (step_index == 1) {  // after merge, before quality
      std::string merged = (dir.path / "work/merged.csv").string();
      std::string bytes = read_file(merged);
      bytes[bytes.size() / 2] = bytes[bytes.size() / 2] == '1' ? '2' : '1';
      atomic_write_file(merged, bytes);
    }
  };
  CHECK_THROWS_WITH_AS(run_pipeline(manifest, dir.path.string(), options),
                       doctest::Contains("does not match the digest"), Error);
  json record = json::parse(read_file((dir.path / "run_record.json").string()));
  CHECK(record["status"] == "failed");
  CHECK(record["steps"][1]["status"] == "failed");  // reported at the consuming step
}

TEST_CASE("a failing step stops the run and leaves no partial outputs") {
  TempDir dir("fail");
  generate_mussel_into(dir.path, 51);
  atomic_write_file((dir.path / "specs/split.json").string(),
                    R"({"mode":"chronological","train_fraction":"1/2","target_column":"no_such"})");
  PipelineManifest manifest = PipelineManifest::load((dir.path / "pipeline_linear.json").string());
  CHECK_THROWS_AS(run_pipeline(manifest, dir.path.string()), Error);
  json record = json::parse(read_file((dir.path / "run_record.json").string()));
  CHECK(record["status"] == "failed");
  REQUIRE(record["steps"].size() == 3);  // merge, quality, failed split
  CHECK(record["steps"][2]["status"] == "failed");
  CHECK_FALSE(file_exists((dir.path / "work/train.csv").string()));
  CHECK_FALSE(file_exists((dir.path / "work/model.json").string()));
}

TEST_CASE("skipped steps are recorded but not executed") {
  TempDir dir("skip");
  generate_mussel_into(dir.path, 61);
  PipelineManifest manifest = PipelineManifest::load((dir.path / "pipeline_linear.json").string());
  // skip report; earlier steps still run
  manifest.steps[4].skip = true;
  json record = run_pipeline(manifest, dir.path.string());
  CHECK(record["status"] == "ok");
  CHECK(record["steps"][4]["status"] == "skipped");
  CHECK_FALSE(file_exists((dir.path / "work/report.md").string()));
}

TEST_CASE("invalid manifests refuse to run") {
  json manifest_json = {{"name", "x"},
                        {"steps", json::array({json{{"component", "evaluate"},
                                                    {"inputs", json::array({"ghost.csv"})},
                                                    {"outputs", json::array({"m.json"})}}})}};
  PipelineManifest manifest = PipelineManifest::from_json(manifest_json);
  TempDir dir("invalid");
  CHECK_THROWS_AS(run_pipeline(manifest, dir.path.string()), Error);
}

TEST_CASE("a manifest can start from a generate step") {
  TempDir dir("genstep");
  ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::mussel);
  config.seed = 71;
  config.out_dir = ".";
  atomic_write_file((dir.path / "scenario.json").string(), dump_json(config.to_json()));

  json outputs = json::array();
  for (const auto& f : scenario_files(config)) outputs.push_back(f);
  json manifest_json = {
      {"name", "from-scratch"},
      {"steps", json::array(
                    {json{{"component", "generate"},
                          {"params", "scenario.json"},
                          {"inputs", json::array()},
                          {"outputs", outputs}},
                     json{{"component", "merge"},
                          {"params", "specs/merge.json"},
                          {"inputs", json::array({"shell.csv", "hr.csv", "do.csv"})},
                          {"outputs", json::array({"work/merged.csv", "work/merge_report.json"})}}})}};
  PipelineManifest manifest = PipelineManifest::from_json(manifest_json);
  // merge's params document is itself produced by the generate step
  json record = run_pipeline(manifest, dir.path.string());
  CHECK(record["status"] == "ok");
  CHECK(file_exists((dir.path / "work/merged.csv").string()));
}

TEST_CASE("an unwritable workdir is reported as such") {
  TempDir dir("nowrite");
  std::string pred = (dir.path / "p.csv").string();
  atomic_write_file(pred, "timestamp_ms,actual,predicted,usable\n0,1,1,1\n1000,2,2,1\n");
  json manifest_json = {{"name", "w"},
                        {"steps", json::array({json{{"component", "evaluate"},
                                                    {"inputs", json::array({pred})},
                                                    {"outputs", json::array({"m.json"})}}})}};
  PipelineManifest manifest = PipelineManifest::from_json(manifest_json);
  CHECK_THROWS_AS(run_pipeline(manifest, "/dev/null/never"), Error);
}

TEST_CASE("manifest parsing rejects junk") {
  TempDir dir("junk");
  std::string p = (dir.path / "m.json").string();
  atomic_write_file(p, "{not json");
  CHECK_THROWS_AS(PipelineManifest::load(p), Error);
  atomic_write_file(p, R"({"name":"x"})");  // no steps
  CHECK_THROWS_AS(PipelineManifest::load(p), Error);
}
