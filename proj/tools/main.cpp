#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "twinpipe/error.hpp"
#include "twinpipe/jsonio.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/runner.hpp"
#include "twinpipe/synth.hpp"
#include "twinpipe/util.hpp"

using namespace twinpipe;

namespace {

// Errors go to stderr twice: one machine-readable JSON line, one for humans.
int fail(const std::string& code, const std::string& message, int exit_code) {
  json err;
  err["error"] = code;
  err["message"] = message;
  std::cerr << err.dump() << "\n";
  std::cerr << "error: " << message << "\n";
  return exit_code;
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    return fail(e.code_name(), e.what(), static_cast<int>(e.error_class()));
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 3);
  }
}

components::Invocation make_invocation(const std::string& params,
                                       std::vector<std::string> inputs,
                                       std::vector<std::string> outputs,
                                       const std::string& base_dir = "") {
  components::Invocation inv;
  inv.params_path = params;
  inv.inputs = std::move(inputs);
  inv.outputs = std::move(outputs);
  inv.base_dir = base_dir.empty() ? std::filesystem::current_path().string() : base_dir;
  return inv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinpipe: sensor-fusion pipeline engine for animal digital twins"};
  app.require_subcommand(1);

  app.set_version_flag("--version", [] {
    json v;
    v["twinpipe"] = "1.0.0";
    v["components"] = components::all_component_versions();
    v["prng"] = kPrngName;
    return v.dump(2);
  });

  // merge
  auto* merge = app.add_subcommand("merge", "merge raw sensor CSVs onto a common grid");
  std::string merge_params, merge_out_csv = "merged.csv", merge_out_report = "merge_report.json";
  std::string merge_base;
  merge->add_option("--params", merge_params, "MergeSpec JSON")->required();
  merge->add_option("--out-csv", merge_out_csv, "merged CSV output");
  merge->add_option("--out-report", merge_out_report, "merge report JSON output");
  merge->add_option("--base-dir", merge_base, "base for relative paths inside the spec");

  // qc
  auto* qc = app.add_subcommand("qc", "outlier detection and missing-data handling");
  std::string qc_params, qc_in, qc_out_csv = "qc.csv", qc_out_report = "quality_report.json";
  qc->add_option("--params", qc_params, "QualitySpec JSON (defaults apply when omitted)");
  qc->add_option("--in", qc_in, "merged CSV")->required();
  qc->add_option("--out-csv", qc_out_csv, "quality-checked CSV output");
  qc->add_option("--out-report", qc_out_report, "quality report JSON output");

  // split
  auto* sp = app.add_subcommand("split", "partition into train and test sets");
  std::string sp_params, sp_in, sp_train = "train.csv", sp_test = "test.csv";
  sp->add_option("--params", sp_params, "SplitSpec JSON")->required();
  sp->add_option("--in", sp_in, "quality-checked CSV")->required();
  sp->add_option("--out-train", sp_train, "train CSV output");
  sp->add_option("--out-test", sp_test, "test CSV output");

  // train
  auto* tr = app.add_subcommand("train", "fit a model and predict on the test set");
  std::string tr_params, tr_train, tr_test, tr_model = "model.json", tr_pred = "predictions.csv";
  std::int64_t tr_seed = -1;
  tr->add_option("--params", tr_params, "ModelSpec JSON")->required();
  tr->add_option("--train", tr_train, "training CSV")->required();
  tr->add_option("--test", tr_test, "test CSV")->required();
  tr->add_option("--out-model", tr_model, "model artifact output");
  tr->add_option("--out-predictions", tr_pred, "test predictions CSV output");
  tr->add_option("--seed", tr_seed, "override the forest seed from the spec");

  // predict
  auto* pr = app.add_subcommand("predict", "apply a saved model to new data");
  std::string pr_model, pr_in, pr_out = "predictions.csv", pr_params;
  pr->add_option("--model", pr_model, "model artifact JSON")->required();
  pr->add_option("--in", pr_in, "data CSV")->required();
  pr->add_option("--out", pr_out, "predictions CSV output");
  pr->add_option("--params", pr_params, "unused, accepted for manifest symmetry");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "compute metrics from a predictions CSV");
  std::string ev_in, ev_out = "metrics.json";
  ev->add_option("--in", ev_in, "predictions CSV")->required();
  ev->add_option("--out", ev_out, "metrics JSON output");

  // report
  auto* rp = app.add_subcommand("report", "render the run report (JSON + markdown)");
  std::string rp_params, rp_model, rp_pred, rp_metrics, rp_json = "report.json", rp_md = "report.md";
  std::string rp_base;
  rp->add_option("--params", rp_params, "report context JSON (title, generated_at, source_data)");
  rp->add_option("--model", rp_model, "model artifact JSON")->required();
  rp->add_option("--predictions", rp_pred, "predictions CSV")->required();
  rp->add_option("--metrics", rp_metrics, "metrics JSON (recomputed when omitted)");
  rp->add_option("--out-json", rp_json, "report JSON output");
  rp->add_option("--out-md", rp_md, "report markdown output");
  rp->add_option("--base-dir", rp_base, "base for relative paths in the report context");

  // run / validate
  auto* run = app.add_subcommand("run", "execute a pipeline manifest");
  std::string run_manifest, run_workdir = ".", run_exec = "inprocess";
  run->add_option("manifest", run_manifest, "pipeline manifest JSON")->required();
  run->add_option("--workdir", run_workdir, "working directory for relative paths");
  run->add_option("--exec", run_exec, "inprocess|subprocess")
      ->check(CLI::IsMember({"inprocess", "subprocess"}));

  auto* val = app.add_subcommand("validate", "validate a manifest without running it");
  std::string val_manifest, val_workdir = ".";
  val->add_option("manifest", val_manifest, "pipeline manifest JSON")->required();
  val->add_option("--workdir", val_workdir, "working directory for relative paths");

  // generate
  auto* gen = app.add_subcommand("generate", "emit a synthetic scenario with ground truth");
  std::string gen_params, gen_kind, gen_out = ".", gen_base;
  std::int64_t gen_seed = -1;
  gen->add_option("--params", gen_params, "ScenarioConfig JSON");
  gen->add_option("--kind", gen_kind, "pig|salmon|mussel (defaults when --params omitted)");
  gen->add_option("--seed", gen_seed, "override the scenario seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--base-dir", gen_base, "base for relative paths inside params");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);  // prints usage or the version/help text
    return rc == 0 ? 0 : 1;
  }

  if (merge->parsed())
    return run_guarded([&] {
      components::run_component(
          "merge", make_invocation(merge_params, {}, {merge_out_csv, merge_out_report}, merge_base));
    });
  if (qc->parsed())
    return run_guarded([&] {
      components::run_component("quality",
                                make_invocation(qc_params, {qc_in}, {qc_out_csv, qc_out_report}));
    });
  if (sp->parsed())
    return run_guarded([&] {
      components::run_component("split", make_invocation(sp_params, {sp_in}, {sp_train, sp_test}));
    });
  if (tr->parsed())
    return run_guarded([&] {
      std::string params = tr_params;
      if (tr_seed >= 0) {
        // flags override only the seed; everything else stays in the spec file
        json spec = load_json_file(tr_params);
        if (!spec.contains("forest")) spec["forest"] = json::object();
        spec["forest"]["seed"] = static_cast<std::uint64_t>(tr_seed);
        params = tr_model + ".spec_override.json";
        atomic_write_file(params, dump_json(spec));
      }
      components::run_component("train",
                                make_invocation(params, {tr_train, tr_test}, {tr_model, tr_pred}));
    });
  if (pr->parsed())
    return run_guarded([&] {
      components::run_component("predict", make_invocation(pr_params, {pr_model, pr_in}, {pr_out}));
    });
  if (ev->parsed())
    return run_guarded([&] {
      components::run_component("evaluate", make_invocation("", {ev_in}, {ev_out}));
    });
  if (rp->parsed())
    return run_guarded([&] {
      std::vector<std::string> inputs = {rp_model, rp_pred};
      if (!rp_metrics.empty()) inputs.push_back(rp_metrics);
      components::run_component("report",
                                make_invocation(rp_params, inputs, {rp_json, rp_md}, rp_base));
    });
  if (run->parsed())
    return run_guarded([&] {
      PipelineManifest manifest = PipelineManifest::load(run_manifest);
      RunOptions options;
      options.exec = run_exec == "subprocess" ? RunOptions::Exec::subprocess
                                              : RunOptions::Exec::inprocess;
      options.cli_path = std::filesystem::absolute(argv[0]).string();
      json record = run_pipeline(manifest, run_workdir, options);
      std::cout << "run " << record["status"].get<std::string>() << ": "
                << record["steps"].size() << " steps, record in " << run_workdir
                << "/run_record.json\n";
    });
  if (val->parsed())
    return run_guarded([&] {
      PipelineManifest manifest = PipelineManifest::load(val_manifest);
      ValidationReport report = validate_manifest(manifest, val_workdir);
      std::cout << report.to_json().dump(2) << "\n";
      if (!report.ok()) throw Error(Errc::validation_failed, "manifest has violations");
    });
  if (gen->parsed())
    return run_guarded([&] {
      ScenarioConfig config;
      if (!gen_params.empty()) {
        config = ScenarioConfig::load(gen_params);
        if (!gen_base.empty())
          config.out_dir = (std::filesystem::path(gen_base) / config.out_dir).string();
      } else if (!gen_kind.empty()) {
        config = ScenarioConfig::defaults(ScenarioConfig::kind_from_name(gen_kind));
      } else {
        raise(Errc::invalid_argument, "generate needs --params or --kind");
      }
      if (gen_seed >= 0) config.seed = static_cast<std::uint64_t>(gen_seed);
      if (gen_out != ".") config.out_dir = gen_out;
      GeneratedScenario result = generate(config);
      std::cout << "generated " << result.files.size() << " files under " << config.out_dir
                << "\n";
    });

  return 0;
}
