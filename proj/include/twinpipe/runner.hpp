#pragma once

#include <functional>
#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"

namespace twinpipe {

/// One pipeline step: a component from the closed set, its params document,
/// and its declared input/output files. Relative paths resolve against the
/// run's working directory.
struct ManifestStep {
  std::string component;  // merge|quality|split|train|predict|evaluate|report|generate
  std::string params;     // may be empty for predict/evaluate/report
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  bool skip = false;
};

struct PipelineManifest {
  std::string name;
  std::vector<ManifestStep> steps;

  static PipelineManifest from_json(const json& doc);
  static PipelineManifest load(const std::string& path);
  json to_json() const;
};

struct Violation {
  int step = -1;  // -1 = manifest-level
  std::string kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  json to_json() const;
};

/// Static checks before execution: closed component set, params schema per
/// component, dangling inputs, output collisions. Collects every violation
/// instead of stopping at the first.
ValidationReport validate_manifest(const PipelineManifest& manifest, const std::string& workdir);

struct RunOptions {
  enum class Exec { inprocess, subprocess } exec = Exec::inprocess;
  std::string cli_path;  // required for subprocess mode
  // debug harness hook, fired before each step executes; lets tests tamper
  // with intermediates to prove the digest guard trips
  std::function<void(std::size_t step_index)> before_step;
};

/// Executes the steps strictly in order, digesting every input and output
/// (SHA-256 over raw bytes) into a run record written to
/// <workdir>/run_record.json after every step. A step whose recorded inputs
/// no longer match their producer's output digests fails before running.
json run_pipeline(const PipelineManifest& manifest, const std::string& workdir,
                  const RunOptions& options = {});

/// Component registry shared by the runner and the CLI: same code path, same
/// file contracts, so `run` and the equivalent subcommand sequence produce
/// identical bytes.
namespace components {

struct Invocation {
  std::string params_path;            // resolved; empty when the component takes none
  std::vector<std::string> inputs;    // resolved
  std::vector<std::string> outputs;   // resolved
  std::string base_dir;               // resolves paths referenced inside params docs
};

bool known_component(const std::string& name);
const char* component_version(const std::string& name);
json all_component_versions();

/// Expected (inputs, outputs) arity; -1 = variable.
void expected_arity(const std::string& name, int& inputs, int& outputs);

void run_component(const std::string& name, const Invocation& invocation);

}  // namespace components

}  // namespace twinpipe
