#include "twinpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "twinpipe/csv.hpp"
#include "twinpipe/error.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/sensors.hpp"
#include "twinpipe/timeseries.hpp"
#include "twinpipe/util.hpp"

namespace fs = std::filesystem;

namespace twinpipe {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

struct KindDefaults {
  std::int64_t duration_s;
  double target_noise_sd;
  int missing_cells;
  int outlier_spikes;
};

KindDefaults kind_defaults(ScenarioConfig::Kind kind) {
  switch (kind) {
    case ScenarioConfig::Kind::pig: return {10800, 3.0, 0, 0};
    case ScenarioConfig::Kind::salmon: return {1000, 4.0, 0, 0};
    case ScenarioConfig::Kind::mussel: return {5400, 0.05, 5, 3};
  }
  return {0, 0, 0, 0};
}

std::map<std::string, double> noise_defaults(ScenarioConfig::Kind kind) {
  // Channel noise levels are seeded from typical hardware accuracy figures
  // (e.g. skin temperature +-0.05 degC, DO probe ~0.03).
  switch (kind) {
    case ScenarioConfig::Kind::pig:
      return {{"wearable.hf", 0.5}, {"wearable.skin_temp", 0.05}, {"wearable.hr", 1.0},
              {"accel", 0.01},      {"ambient.temp", 0.1}};
    case ScenarioConfig::Kind::salmon:
      return {{"accel", 0.005}, {"tank.do", 0.002}};
    case ScenarioConfig::Kind::mussel:
      return {{"shell.opening", 0.25}, {"hr.bpm", 0.2}};
  }
  return {};
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults(Kind kind) {
  ScenarioConfig c;
  c.kind = kind;
  KindDefaults d = kind_defaults(kind);
  c.duration_s = d.duration_s;
  c.target_noise_sd = d.target_noise_sd;
  c.missing_cells = d.missing_cells;
  c.outlier_spikes = d.outlier_spikes;
  c.channel_noise_sd = noise_defaults(kind);
  return c;
}

ScenarioConfig::Kind ScenarioConfig::kind_from_name(const std::string& name) {
  if (name == "pig") return Kind::pig;
  if (name == "salmon") return Kind::salmon;
  if (name == "mussel") return Kind::mussel;
  raise(Errc::invalid_argument, "unknown scenario kind '" + name + "'");
}

const char* ScenarioConfig::kind_name() const {
  switch (kind) {
    case Kind::pig: return "pig";
    case Kind::salmon: return "salmon";
    case Kind::mussel: return "mussel";
  }
  return "?";
}

ScenarioConfig ScenarioConfig::from_json(const json& doc) {
  Kind kind = kind_from_name(doc.at("kind").get<std::string>());
  ScenarioConfig c = defaults(kind);
  if (doc.contains("duration_s")) c.duration_s = doc["duration_s"].get<std::int64_t>();
  if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("target_noise_sd")) c.target_noise_sd = doc["target_noise_sd"].get<double>();
  if (doc.contains("channel_noise_sd"))
    for (auto it = doc["channel_noise_sd"].begin(); it != doc["channel_noise_sd"].end(); ++it)
      c.channel_noise_sd[it.key()] = it.value().get<double>();
  if (doc.contains("thermo_scale")) c.thermo_scale = doc["thermo_scale"].get<double>();
  if (doc.contains("faults")) {
    c.missing_cells = doc["faults"].value("missing_cells", c.missing_cells);
    c.outlier_spikes = doc["faults"].value("outlier_spikes", c.outlier_spikes);
  }
  if (doc.contains("respirometry")) {
    c.volume_liters = doc["respirometry"].value("volume_liters", c.volume_liters);
    c.mass_kg = doc["respirometry"].value("mass_kg", c.mass_kg);
  }
  if (doc.contains("out_dir")) c.out_dir = doc["out_dir"].get<std::string>();
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  return from_json(load_json_file(path));
}

json ScenarioConfig::to_json() const {
  json doc;
  doc["kind"] = kind_name();
  doc["duration_s"] = duration_s;
  doc["seed"] = seed;
  doc["target_noise_sd"] = target_noise_sd;
  doc["channel_noise_sd"] = channel_noise_sd;
  if (kind == Kind::pig) doc["thermo_scale"] = thermo_scale;
  doc["faults"] = {{"missing_cells", missing_cells}, {"outlier_spikes", outlier_spikes}};
  if (kind == Kind::salmon)
    doc["respirometry"] = {{"volume_liters", volume_liters}, {"mass_kg", mass_kg}};
  doc["out_dir"] = out_dir;
  return doc;
}

namespace {

const std::vector<std::string> kSpecFiles = {
    "specs/merge.json",        "specs/quality.json", "specs/split.json",
    "specs/model_linear.json", "specs/model_forest.json", "specs/report.json",
    "pipeline_linear.json",    "pipeline_forest.json"};

double noise_for(const ScenarioConfig& c, const std::string& key) {
  auto it = c.channel_noise_sd.find(key);
  return it != c.channel_noise_sd.end() ? it->second : 0.0;
}

Rng channel_rng(const ScenarioConfig& c, const char* name) {
  return Rng(c.seed ^ name_hash(name));
}

// Writes a sensor CSV in the ingest dialect. When elapsed_seconds is true the
// time column holds whole seconds (the mussel logger convention).
void write_sensor_csv(const std::string& path, const std::vector<Timestamp>& ts,
                      const std::vector<std::pair<std::string, const std::vector<double>*>>& cols,
                      bool elapsed_seconds) {
  std::string out = "t";
  for (const auto& [name, _] : cols) out += "," + name;
  out += '\n';
  for (std::size_t r = 0; r < ts.size(); ++r) {
    out += elapsed_seconds ? std::to_string(ts[r] / 1000) : std::to_string(ts[r]);
    for (const auto& [_, values] : cols) {
      out += ',';
      if (!is_missing((*values)[r])) out += format_double((*values)[r]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

struct FaultPlan {
  // row index -> channel it hits
  std::vector<std::pair<std::string, std::size_t>> missing;
  std::vector<std::pair<std::string, std::size_t>> spikes;
};

// Picks interior, pairwise non-adjacent rows so single-cell gaps stay
// interpolatable and spikes never collide with missing cells.
FaultPlan plan_faults(Rng& rng, std::size_t rows, const std::vector<std::string>& missing_channels,
                      const std::vector<std::string>& spike_channels, int n_missing, int n_spikes) {
  FaultPlan plan;
  if (rows < 8) return plan;
  std::set<std::size_t> used;
  auto pick_row = [&]() -> std::size_t {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::size_t r = 1 + static_cast<std::size_t>(rng.bounded(rows - 2));
      bool clash = used.count(r) || used.count(r - 1) || used.count(r + 1);
      if (!clash) {
        used.insert(r);
        return r;
      }
    }
    raise(Errc::internal, "could not place faults");
  };
  for (int i = 0; i < n_missing; ++i) {
    std::size_t ch = static_cast<std::size_t>(rng.bounded(missing_channels.size()));
    plan.missing.emplace_back(missing_channels[ch], pick_row());
  }
  for (int i = 0; i < n_spikes; ++i) {
    std::size_t ch = static_cast<std::size_t>(rng.bounded(spike_channels.size()));
    plan.spikes.emplace_back(spike_channels[ch], pick_row());
  }
  return plan;
}

double sample_sd(const std::vector<double>& v) {
  double anchor = 0, s1 = 0, s2 = 0;
  std::size_t n = 0;
  for (double x : v) {
    if (is_missing(x)) continue;
    if (n == 0) anchor = x;
    double d = x - anchor;
    s1 += d;
    s2 += d * d;
    ++n;
  }
  if (n < 2) return 0.0;
  double var = (s2 - s1 * s1 / static_cast<double>(n)) / static_cast<double>(n - 1);
  return std::sqrt(var < 0 ? 0 : var);
}

json apply_faults(Rng& rng, const FaultPlan& plan,
                  std::map<std::string, std::vector<double>*>& channels,
                  const std::map<std::string, const std::vector<Timestamp>*>& times) {
  json faults;
  json missing = json::array();
  for (const auto& [channel, row] : plan.missing) {
    std::vector<double>& values = *channels.at(channel);
    missing.push_back({{"channel", channel},
                       {"row", row},
                       {"timestamp_ms", (*times.at(channel))[row]},
                       {"original", values[row]}});
    values[row] = twinpipe::missing();
  }
  faults["missing"] = missing;
  json spikes = json::array();
  for (const auto& [channel, row] : plan.spikes) {
    std::vector<double>& values = *channels.at(channel);
    double sd = sample_sd(values);
    double sign = rng.bounded(2) == 0 ? -1.0 : 1.0;
    double injected = values[row] + sign * 10.0 * sd;  // comfortably past the 8-sd bar
    spikes.push_back({{"channel", channel},
                      {"row", row},
                      {"timestamp_ms", (*times.at(channel))[row]},
                      {"original", values[row]},
                      {"injected", injected},
                      {"magnitude_sd", 10.0}});
    values[row] = injected;
  }
  faults["spikes"] = spikes;
  return faults;
}

json make_manifest(const std::string& name, const std::string& model_spec,
                   const std::vector<std::string>& merge_inputs) {
  json steps = json::array();
  steps.push_back({{"component", "merge"},
                   {"params", "specs/merge.json"},
                   {"inputs", merge_inputs},
                   {"outputs", json::array({"work/merged.csv", "work/merge_report.json"})}});
  steps.push_back({{"component", "quality"},
                   {"params", "specs/quality.json"},
                   {"inputs", json::array({"work/merged.csv"})},
                   {"outputs", json::array({"work/qc.csv", "work/quality_report.json"})}});
  steps.push_back({{"component", "split"},
                   {"params", "specs/split.json"},
                   {"inputs", json::array({"work/qc.csv"})},
                   {"outputs", json::array({"work/train.csv", "work/test.csv"})}});
  steps.push_back({{"component", "train"},
                   {"params", model_spec},
                   {"inputs", json::array({"work/train.csv", "work/test.csv"})},
                   {"outputs", json::array({"work/model.json", "work/predictions.csv"})}});
  steps.push_back({{"component", "report"},
                   {"params", "specs/report.json"},
                   {"inputs", json::array({"work/model.json", "work/predictions.csv"})},
                   {"outputs", json::array({"work/report.json", "work/report.md"})}});
  json manifest;
  manifest["name"] = name;
  manifest["steps"] = steps;
  return manifest;
}

void write_common_specs(const ScenarioConfig& config, const fs::path& dir, const json& merge_spec,
                        const json& quality_spec, const std::string& target,
                        const std::vector<std::string>& features, const std::string& split_fraction,
                        const std::vector<std::string>& merge_inputs) {
  atomic_write_file((dir / "specs/merge.json").string(), dump_json(merge_spec));
  atomic_write_file((dir / "specs/quality.json").string(), dump_json(quality_spec));

  json split_spec;
  split_spec["mode"] = "chronological";
  split_spec["train_fraction"] = split_fraction;
  split_spec["target_column"] = target;
  atomic_write_file((dir / "specs/split.json").string(), dump_json(split_spec));

  json linear_spec;
  linear_spec["kind"] = "linear";
  linear_spec["target"] = target;
  linear_spec["features"] = features;
  linear_spec["linear"] = {{"ridge_epsilon", 1e-8}};
  atomic_write_file((dir / "specs/model_linear.json").string(), dump_json(linear_spec));

  json forest_spec;
  forest_spec["kind"] = "random_forest";
  forest_spec["target"] = target;
  forest_spec["features"] = features;
  forest_spec["forest"] = {{"n_trees", 100},
                           {"max_depth", nullptr},
                           {"min_samples_leaf", 5},
                           {"mtry", nullptr},
                           {"seed", 1}};
  atomic_write_file((dir / "specs/model_forest.json").string(), dump_json(forest_spec));

  json report_spec;
  report_spec["title"] = std::string(config.kind_name()) + " energy-expenditure twin";
  report_spec["generated_at"] = "";
  report_spec["source_data"] = "work/test.csv";
  atomic_write_file((dir / "specs/report.json").string(), dump_json(report_spec));

  atomic_write_file(
      (dir / "pipeline_linear.json").string(),
      dump_json(make_manifest(std::string(config.kind_name()) + "-linear",
                              "specs/model_linear.json", merge_inputs)));
  atomic_write_file(
      (dir / "pipeline_forest.json").string(),
      dump_json(make_manifest(std::string(config.kind_name()) + "-forest",
                              "specs/model_forest.json", merge_inputs)));
}

json source_json(const std::string& path, const std::string& channel, const std::string& ts_col,
                 const std::vector<std::string>& cols, const std::string& fmt,
                 const std::string& rate, const std::string& unit) {
  json s;
  s["path"] = path;
  s["channel_name"] = channel;
  s["timestamp_column"] = ts_col;
  s["value_columns"] = cols;
  s["timestamp_format"] = fmt;
  s["nominal_rate_hz"] = rate;
  s["unit"] = unit;
  return s;
}

json feature_spec_json(std::int64_t window_ms) {
  return {{"window_ms", window_ms},
          {"aggregations", json::array({"mean"})},
          {"label_alignment", "window_end"}};
}

// ---------------------------------------------------------------- pig -----

GeneratedScenario generate_pig(const ScenarioConfig& config) {
  const std::int64_t labels = config.duration_s / 180;
  if (labels < 10)
    raise(Errc::duration_too_short,
          "pig scenario needs >= 1800 s for 10 heat labels, got " +
              std::to_string(config.duration_s) + " s");
  const std::int64_t horizon_s = labels * 180;
  const std::size_t n1 = static_cast<std::size_t>(horizon_s) + 1;  // 1 Hz incl. endpoint

  std::vector<Timestamp> ts1(n1);
  for (std::size_t i = 0; i < n1; ++i) ts1[i] = static_cast<Timestamp>(i) * 1000;

  // Thermoneutral phase boundaries land on label edges so feature windows
  // never straddle a condition change.
  const std::int64_t b1 = (labels / 3) * 180;
  const std::int64_t b2 = (2 * labels / 3) * 180;
  auto phase_of = [&](double t_s) { return t_s < b1 ? 0 : (t_s < b2 ? 1 : 2); };
  const double phase_temp[3] = {12.0, 22.0, 32.0};
  const double phase_effect[3] = {40.0, 0.0, 25.0};  // thermoregulation cost

  auto make_channel = [&](const char* name, auto&& f, double noise_sd) {
    RawChannel ch;
    ch.name = name;
    ch.nominal_rate_hz = Rational(1, 1);
    ch.samples.resize(n1);
    Rng rng = channel_rng(config, name);
    for (std::size_t i = 0; i < n1; ++i) {
      double t = static_cast<double>(ts1[i]) / 1000.0;
      ch.samples[i] = {ts1[i], f(t) + (noise_sd > 0 ? noise_sd * rng.gaussian() : 0.0)};
    }
    return ch;
  };

  RawChannel hf = make_channel(
      "wearable.hf",
      [&](double t) { return 80.0 + 18.0 * std::sin(kTau * t / 2400.0 + 0.4) +
                             2.5 * std::sin(kTau * t / 530.0 + 1.3); },
      noise_for(config, "wearable.hf"));
  RawChannel skin = make_channel(
      "wearable.skin_temp",
      [&](double t) { return 36.5 + 0.8 * std::sin(kTau * t / 3100.0 + 2.1); },
      noise_for(config, "wearable.skin_temp"));
  RawChannel hr = make_channel(
      "wearable.hr",
      [&](double t) { return 95.0 + 16.0 * std::sin(kTau * t / 1700.0 + 0.9) +
                             5.0 * std::sin(kTau * t / 450.0 + 2.8); },
      noise_for(config, "wearable.hr"));
  RawChannel ambient = make_channel(
      "ambient.temp", [&](double t) { return phase_temp[phase_of(t)]; },
      noise_for(config, "ambient.temp"));

  // Movement dynamics sit well above the 60 s ODBA window (4-10 s periods at
  // 1 Hz sampling) under a slow activity envelope, so ODBA carries real
  // between-window signal.
  auto activity = [](double t) { return 0.5 + 0.5 * std::sin(kTau * t / 1200.0 + 1.0); };
  double accel_noise = noise_for(config, "accel");
  TriAxialAccel accel;
  accel.x = make_channel(
      "accel.x",
      [&](double t) { return activity(t) * (0.5 * std::sin(kTau * t / 4.7 + 0.5) +
                                            0.2 * std::sin(kTau * t / 8.3)); },
      accel_noise);
  accel.y = make_channel(
      "accel.y",
      [&](double t) { return activity(t) * (0.4 * std::sin(kTau * t / 5.9 + 1.0) +
                                            0.15 * std::sin(kTau * t / 7.1 + 0.3)); },
      accel_noise);
  accel.z = make_channel(
      "accel.z",
      [&](double t) { return 9.81 + activity(t) * (0.35 * std::sin(kTau * t / 6.4 + 2.0) +
                                                   0.15 * std::sin(kTau * t / 9.7 + 1.1)); },
      accel_noise);
  accel.x.unit = accel.y.unit = accel.z.unit = "m/s2";

  RawChannel odba_ch = odba(accel, 60000);
  odba_ch.name = "wearable.odba";

  // Labels live at the end of each 3-minute window.
  TimeGrid grid{180000, 180000, labels};
  FeatureSpec mean_spec{180000, {Agg::mean}, LabelAlignment::window_end};
  auto hf_mean = window_aggregate(hf, mean_spec, grid).at("wearable.hf_mean");
  auto odba_mean = window_aggregate(odba_ch, mean_spec, grid).at("wearable.odba_mean");
  auto hr_mean = window_aggregate(hr, mean_spec, grid).at("wearable.hr_mean");
  auto amb_mean = window_aggregate(ambient, mean_spec, grid).at("ambient.temp_mean");

  const double intercept = -3.0;
  const double c_hf = 1.5, c_odba = 8.0, c_hr = 0.2, c_amb = 0.8;

  Rng target_rng = channel_rng(config, "chamber.heat");
  std::vector<Timestamp> label_ts(static_cast<std::size_t>(labels));
  std::vector<double> heat(static_cast<std::size_t>(labels));
  for (std::int64_t k = 0; k < labels; ++k) {
    std::size_t uk = static_cast<std::size_t>(k);
    label_ts[uk] = grid.point(k);
    int phase = phase_of(static_cast<double>(grid.point(k)) / 1000.0 - 180.0);  // window start
    heat[uk] = intercept + c_hf * hf_mean[uk] + c_odba * odba_mean[uk] + c_hr * hr_mean[uk] +
               c_amb * amb_mean[uk] + config.thermo_scale * phase_effect[phase] +
               (config.target_noise_sd > 0 ? config.target_noise_sd * target_rng.gaussian() : 0.0);
  }

  Rng fault_rng = channel_rng(config, "faults");
  FaultPlan plan = plan_faults(fault_rng, heat.size(), {"chamber.heat"}, {"chamber.heat"},
                               config.missing_cells, config.outlier_spikes);
  std::map<std::string, std::vector<double>*> fault_cols{{"chamber.heat", &heat}};
  std::map<std::string, const std::vector<Timestamp>*> fault_times{{"chamber.heat", &label_ts}};
  json faults = apply_faults(fault_rng, plan, fault_cols, fault_times);

  fs::path dir(config.out_dir);
  fs::create_directories(dir / "specs");

  auto values_of = [](const RawChannel& ch) {
    std::vector<double> v(ch.samples.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ch.samples[i].value;
    return v;
  };
  std::vector<double> hf_v = values_of(hf), skin_v = values_of(skin), hr_v = values_of(hr),
                      odba_v = values_of(odba_ch), amb_v = values_of(ambient),
                      ax = values_of(accel.x), ay = values_of(accel.y), az = values_of(accel.z);

  write_sensor_csv((dir / "wearable.csv").string(), ts1,
                   {{"hf", &hf_v}, {"skin_temp", &skin_v}, {"hr", &hr_v}, {"odba", &odba_v}},
                   false);
  write_sensor_csv((dir / "accel.csv").string(), ts1, {{"x", &ax}, {"y", &ay}, {"z", &az}}, false);
  write_sensor_csv((dir / "ambient.csv").string(), ts1, {{"temp", &amb_v}}, false);
  write_sensor_csv((dir / "chamber.csv").string(), label_ts, {{"heat", &heat}}, false);

  json merge_spec;
  json wearable_src = source_json("wearable.csv", "wearable", "t",
                                  {"hf", "skin_temp", "hr", "odba"}, "epoch_ms", "1", "");
  wearable_src["column_units"] = {
      {"hf", "W/m2"}, {"skin_temp", "degC"}, {"hr", "bpm"}, {"odba", "m/s2"}};
  merge_spec["sources"] = json::array(
      {wearable_src,
       source_json("ambient.csv", "ambient", "t", {"temp"}, "epoch_ms", "1", "degC"),
       source_json("chamber.csv", "chamber", "t", {"heat"}, "epoch_ms", "1/180", "W")});
  merge_spec["grid"] = {{"strategy", "master_channel"}, {"channel", "chamber.heat"}};
  merge_spec["default_policy"] = {{"upsample", "hold_last"}, {"downsample", "mean"},
                                  {"max_gap_ms", nullptr}};
  merge_spec["feature_specs"] = {{"wearable.hf", feature_spec_json(180000)},
                                 {"wearable.odba", feature_spec_json(180000)},
                                 {"wearable.hr", feature_spec_json(180000)},
                                 {"ambient.temp", feature_spec_json(180000)}};

  json quality_spec;
  quality_spec["outlier_method"] = {{"method", "iqr"}, {"factor", 1.5}};
  quality_spec["outlier_action"] = "flag_only";
  quality_spec["missing_policy"] = {{"policy", "linear_interpolate"}, {"max_gap_cells", 3}};

  std::vector<std::string> features = {"wearable.hf_mean", "wearable.odba_mean",
                                       "wearable.hr_mean", "ambient.temp_mean"};
  write_common_specs(config, dir, merge_spec, quality_spec, "chamber.heat", features, "5/6",
                     {"wearable.csv", "ambient.csv", "chamber.csv"});

  json gt;
  gt["schema_version"] = 1;
  gt["kind"] = "pig";
  gt["seed"] = config.seed;
  gt["prng"] = kPrngName;
  gt["duration_s"] = horizon_s;
  gt["grid"] = {{"start_ms", grid.start}, {"period_ms", grid.period_ms}, {"count", grid.count}};
  gt["target_column"] = "chamber.heat";
  gt["feature_columns"] = features;
  json coeffs;
  coeffs["wearable.hf_mean"] = c_hf;
  coeffs["wearable.odba_mean"] = c_odba;
  coeffs["wearable.hr_mean"] = c_hr;
  coeffs["ambient.temp_mean"] = c_amb;
  gt["planted"] = {{"intercept", intercept},
                   {"coefficients", coeffs},
                   {"thermo_scale", config.thermo_scale},
                   {"thermo_effect", json::array({phase_effect[0], phase_effect[1], phase_effect[2]})},
                   {"phase_boundaries_s", json::array({b1, b2})}};
  gt["noise"] = {{"target_sd", config.target_noise_sd}, {"channel_sd", config.channel_noise_sd}};
  gt["faults"] = faults;
  gt["files"] = scenario_files(config);
  atomic_write_file((dir / "ground_truth.json").string(), dump_json(gt));

  return {scenario_files(config), gt};
}

// ------------------------------------------------------------- salmon -----

GeneratedScenario generate_salmon(const ScenarioConfig& config) {
  const std::int64_t windows = config.duration_s / 40;
  if (windows < 10)
    raise(Errc::duration_too_short,
          "salmon scenario needs >= 400 s for 10 MO2 labels, got " +
              std::to_string(config.duration_s) + " s");
  const std::int64_t horizon_s = windows * 40;

  // 25 Hz acceleration over [0, horizon)
  const std::size_t n25 = static_cast<std::size_t>(horizon_s) * 25;
  std::vector<Timestamp> ts25(n25);
  for (std::size_t i = 0; i < n25; ++i) ts25[i] = static_cast<Timestamp>(i) * 40;

  double accel_noise = noise_for(config, "accel");
  auto make_axis = [&](const char* name, auto&& f) {
    RawChannel ch;
    ch.name = name;
    ch.unit = "m/s2";
    ch.nominal_rate_hz = Rational(25, 1);
    ch.samples.resize(n25);
    Rng rng = channel_rng(config, name);
    for (std::size_t i = 0; i < n25; ++i) {
      double t = static_cast<double>(ts25[i]) / 1000.0;
      ch.samples[i] = {ts25[i], f(t) + (accel_noise > 0 ? accel_noise * rng.gaussian() : 0.0)};
    }
    return ch;
  };

  // Tail-beat-band dynamics (~1-2.5 Hz at 25 Hz sampling) under a slow
  // activity envelope: the 2 s ODBA window averages the beat out of the
  // running mean while the envelope drives strong between-window variation.
  auto envelope = [](double t) { return 0.55 + 0.45 * std::sin(kTau * t / 300.0); };
  TriAxialAccel accel;
  accel.x = make_axis("tag.x", [&](double t) {
    return envelope(t) * (0.9 * std::sin(kTau * t / 0.45 + 0.6) + 0.25 * std::sin(kTau * t / 1.3));
  });
  accel.y = make_axis("tag.y", [&](double t) {
    return envelope(t) * (0.7 * std::sin(kTau * t / 0.52 + 1.7) + 0.2 * std::sin(kTau * t / 0.9));
  });
  accel.z = make_axis("tag.z", [&](double t) {
    return 9.81 + envelope(t) * (0.8 * std::sin(kTau * t / 0.41 + 2.4) + 0.3 * std::sin(kTau * t / 1.1));
  });

  RawChannel odba_ch = odba(accel, 2000);
  odba_ch.name = "tag.odba";

  TimeGrid grid{40000, 40000, windows};
  FeatureSpec mean_spec{40000, {Agg::mean}, LabelAlignment::window_end};
  auto odba_mean = window_aggregate(odba_ch, mean_spec, grid).at("tag.odba_mean");

  const double a = 60.0, b = 40.0;  // MO2 = a * odba_mean + b
  Rng target_rng = channel_rng(config, "resp.mo2");
  std::vector<double> planted_mo2(static_cast<std::size_t>(windows));
  for (std::size_t w = 0; w < planted_mo2.size(); ++w)
    planted_mo2[w] = a * odba_mean[w] + b +
                     (config.target_noise_sd > 0 ? config.target_noise_sd * target_rng.gaussian() : 0.0);

  // Dissolved oxygen: piecewise linear, slope per window chosen so the
  // closed-respirometry formula recovers the planted MO2 exactly.
  const std::size_t nDo = static_cast<std::size_t>(horizon_s) + 1;
  std::vector<Timestamp> tsDo(nDo);
  for (std::size_t i = 0; i < nDo; ++i) tsDo[i] = static_cast<Timestamp>(i) * 1000;
  double do_noise = noise_for(config, "tank.do");
  Rng do_rng = channel_rng(config, "tank.do");
  RawChannel do_ch;
  do_ch.name = "tank.do";
  do_ch.unit = "mg/L";
  do_ch.nominal_rate_hz = Rational(1, 1);
  do_ch.samples.resize(nDo);
  double level = 10.0;
  std::size_t i = 0;
  for (std::int64_t w = 0; w < windows; ++w) {
    double slope_per_h = -planted_mo2[static_cast<std::size_t>(w)] * config.mass_kg / config.volume_liters;
    for (; i < static_cast<std::size_t>((w + 1) * 40); ++i) {
      double dt_h = static_cast<double>(tsDo[i] - w * 40000) / 3.6e6;
      do_ch.samples[i] = {tsDo[i], level + slope_per_h * dt_h +
                                        (do_noise > 0 ? do_noise * do_rng.gaussian() : 0.0)};
    }
    level += slope_per_h * (40.0 / 3600.0);
  }
  do_ch.samples[nDo - 1] = {tsDo[nDo - 1],
                            level + (do_noise > 0 ? do_noise * do_rng.gaussian() : 0.0)};

  RespirometrySetup setup{config.volume_liters, config.mass_kg};
  RawChannel mo2_ch = oxygen_uptake_rate(do_ch, setup, 40000);
  mo2_ch.name = "resp.mo2";

  std::vector<Timestamp> mo2_ts(mo2_ch.samples.size());
  std::vector<double> mo2_v(mo2_ch.samples.size());
  for (std::size_t k = 0; k < mo2_ch.samples.size(); ++k) {
    mo2_ts[k] = mo2_ch.samples[k].timestamp_ms;
    mo2_v[k] = mo2_ch.samples[k].value;
  }

  Rng fault_rng = channel_rng(config, "faults");
  FaultPlan plan = plan_faults(fault_rng, mo2_v.size(), {"resp.mo2"}, {"resp.mo2"},
                               config.missing_cells, config.outlier_spikes);
  std::map<std::string, std::vector<double>*> fault_cols{{"resp.mo2", &mo2_v}};
  std::map<std::string, const std::vector<Timestamp>*> fault_times{{"resp.mo2", &mo2_ts}};
  json faults = apply_faults(fault_rng, plan, fault_cols, fault_times);

  fs::path dir(config.out_dir);
  fs::create_directories(dir / "specs");

  auto values_of = [](const RawChannel& ch) {
    std::vector<double> v(ch.samples.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = ch.samples[k].value;
    return v;
  };
  std::vector<double> ax = values_of(accel.x), ay = values_of(accel.y), az = values_of(accel.z),
                      odba_v = values_of(odba_ch), do_v = values_of(do_ch);

  write_sensor_csv((dir / "accel.csv").string(), ts25, {{"x", &ax}, {"y", &ay}, {"z", &az}}, false);
  write_sensor_csv((dir / "odba.csv").string(), ts25, {{"odba", &odba_v}}, false);
  write_sensor_csv((dir / "do.csv").string(), tsDo, {{"do", &do_v}}, false);
  write_sensor_csv((dir / "mo2.csv").string(), mo2_ts, {{"mo2", &mo2_v}}, false);

  json merge_spec;
  merge_spec["sources"] = json::array(
      {source_json("odba.csv", "tag", "t", {"odba"}, "epoch_ms", "25", "m/s2"),
       source_json("do.csv", "tank", "t", {"do"}, "epoch_ms", "1", "mg/L"),
       source_json("mo2.csv", "resp", "t", {"mo2"}, "epoch_ms", "1/40", "mgO2/kg/h")});
  merge_spec["grid"] = {{"strategy", "master_channel"}, {"channel", "resp.mo2"}};
  merge_spec["default_policy"] = {{"upsample", "hold_last"}, {"downsample", "mean"},
                                  {"max_gap_ms", nullptr}};
  merge_spec["feature_specs"] = {{"tag.odba", feature_spec_json(40000)}};

  json quality_spec;
  quality_spec["outlier_method"] = {{"method", "iqr"}, {"factor", 1.5}};
  quality_spec["outlier_action"] = "flag_only";
  quality_spec["missing_policy"] = {{"policy", "linear_interpolate"}, {"max_gap_cells", 3}};

  std::vector<std::string> features = {"tag.odba_mean"};
  write_common_specs(config, dir, merge_spec, quality_spec, "resp.mo2", features, "4/5",
                     {"odba.csv", "do.csv", "mo2.csv"});

  json gt;
  gt["schema_version"] = 1;
  gt["kind"] = "salmon";
  gt["seed"] = config.seed;
  gt["prng"] = kPrngName;
  gt["duration_s"] = horizon_s;
  gt["grid"] = {{"start_ms", grid.start}, {"period_ms", grid.period_ms}, {"count", grid.count}};
  gt["target_column"] = "resp.mo2";
  gt["feature_columns"] = features;
  gt["planted"] = {{"intercept", b}, {"coefficients", {{"tag.odba_mean", a}}}};
  gt["noise"] = {{"target_sd", config.target_noise_sd}, {"channel_sd", config.channel_noise_sd}};
  gt["respirometry"] = {{"volume_liters", config.volume_liters}, {"mass_kg", config.mass_kg}};
  gt["faults"] = faults;
  gt["files"] = scenario_files(config);
  atomic_write_file((dir / "ground_truth.json").string(), dump_json(gt));

  return {scenario_files(config), gt};
}

// ------------------------------------------------------------- mussel -----

GeneratedScenario generate_mussel(const ScenarioConfig& config) {
  const std::int64_t rows = config.duration_s / 60;
  if (rows < 10)
    raise(Errc::duration_too_short,
          "mussel scenario needs >= 600 s for 10 rows, got " + std::to_string(config.duration_s) +
              " s");

  std::vector<Timestamp> ts(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i)
    ts[static_cast<std::size_t>(i)] = i * 60000;

  auto make_series = [&](const char* name, auto&& f, double noise_sd) {
    std::vector<double> v(static_cast<std::size_t>(rows));
    Rng rng = channel_rng(config, name);
    for (std::size_t i = 0; i < v.size(); ++i) {
      double t = static_cast<double>(ts[i]) / 1000.0;
      v[i] = f(t) + (noise_sd > 0 ? noise_sd * rng.gaussian() : 0.0);
    }
    return v;
  };

  std::vector<double> shell = make_series(
      "shell.opening",
      [&](double t) { return 30.0 + 9.0 * std::sin(kTau * t / 3600.0 + 0.7) +
                             2.5 * std::sin(kTau * t / 700.0 + 1.9); },
      noise_for(config, "shell.opening"));
  std::vector<double> hr = make_series(
      "hr.bpm",
      [&](double t) { return 22.0 + 6.0 * std::sin(kTau * t / 2700.0 + 2.3) +
                             2.0 * std::sin(kTau * t / 480.0 + 0.3); },
      noise_for(config, "hr.bpm"));

  const double intercept = 2.0, c_shell = 0.12, c_hr = 0.08;
  Rng target_rng = channel_rng(config, "water.do");
  std::vector<double> dissolved(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < dissolved.size(); ++i)
    dissolved[i] = intercept + c_shell * shell[i] + c_hr * hr[i] +
                   (config.target_noise_sd > 0 ? config.target_noise_sd * target_rng.gaussian() : 0.0);

  Rng fault_rng = channel_rng(config, "faults");
  FaultPlan plan =
      plan_faults(fault_rng, static_cast<std::size_t>(rows),
                  {"shell.opening", "hr.bpm", "water.do"}, {"shell.opening", "hr.bpm"},
                  config.missing_cells, config.outlier_spikes);
  std::map<std::string, std::vector<double>*> fault_cols{
      {"shell.opening", &shell}, {"hr.bpm", &hr}, {"water.do", &dissolved}};
  std::map<std::string, const std::vector<Timestamp>*> fault_times{
      {"shell.opening", &ts}, {"hr.bpm", &ts}, {"water.do", &ts}};
  json faults = apply_faults(fault_rng, plan, fault_cols, fault_times);

  fs::path dir(config.out_dir);
  fs::create_directories(dir / "specs");

  // elapsed seconds, the logger convention for this rig
  write_sensor_csv((dir / "shell.csv").string(), ts, {{"opening", &shell}}, true);
  write_sensor_csv((dir / "hr.csv").string(), ts, {{"bpm", &hr}}, true);
  write_sensor_csv((dir / "do.csv").string(), ts, {{"do", &dissolved}}, true);

  json merge_spec;
  merge_spec["sources"] = json::array(
      {source_json("shell.csv", "shell", "t", {"opening"}, "elapsed_s", "1/60", "mm"),
       source_json("hr.csv", "hr", "t", {"bpm"}, "elapsed_s", "1/60", "bpm"),
       source_json("do.csv", "water", "t", {"do"}, "elapsed_s", "1/60", "mg/L")});
  merge_spec["grid"] = {{"strategy", "slowest"}};
  merge_spec["default_policy"] = {{"upsample", "hold_last"}, {"downsample", "mean"},
                                  {"max_gap_ms", nullptr}};

  json quality_spec;
  quality_spec["outlier_method"] = {{"method", "iqr"}, {"factor", 1.5}};
  // this rig plants spikes by default, so the bundled spec repairs them
  quality_spec["outlier_action"] = "set_missing";
  quality_spec["missing_policy"] = {{"policy", "linear_interpolate"}, {"max_gap_cells", 3}};
  quality_spec["physical_range"] = {{"shell.opening", json::array({0.0, 60.0})}};

  std::vector<std::string> features = {"shell.opening", "hr.bpm"};
  write_common_specs(config, dir, merge_spec, quality_spec, "water.do", features, "4/5",
                     {"shell.csv", "hr.csv", "do.csv"});

  json gt;
  gt["schema_version"] = 1;
  gt["kind"] = "mussel";
  gt["seed"] = config.seed;
  gt["prng"] = kPrngName;
  gt["duration_s"] = rows * 60;
  gt["grid"] = {{"start_ms", 0}, {"period_ms", 60000}, {"count", rows}};
  gt["target_column"] = "water.do";
  gt["feature_columns"] = features;
  json coeffs;
  coeffs["shell.opening"] = c_shell;
  coeffs["hr.bpm"] = c_hr;
  gt["planted"] = {{"intercept", intercept}, {"coefficients", coeffs}};
  gt["noise"] = {{"target_sd", config.target_noise_sd}, {"channel_sd", config.channel_noise_sd}};
  gt["faults"] = faults;
  gt["files"] = scenario_files(config);
  atomic_write_file((dir / "ground_truth.json").string(), dump_json(gt));

  return {scenario_files(config), gt};
}

}  // namespace

std::vector<std::string> scenario_files(const ScenarioConfig& config) {
  std::vector<std::string> files;
  switch (config.kind) {
    case ScenarioConfig::Kind::pig:
      files = {"wearable.csv", "accel.csv", "ambient.csv", "chamber.csv"};
      break;
    case ScenarioConfig::Kind::salmon:
      files = {"accel.csv", "odba.csv", "do.csv", "mo2.csv"};
      break;
    case ScenarioConfig::Kind::mussel:
      files = {"shell.csv", "hr.csv", "do.csv"};
      break;
  }
  files.push_back("ground_truth.json");
  files.insert(files.end(), kSpecFiles.begin(), kSpecFiles.end());
  return files;
}

GeneratedScenario generate(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  KindDefaults d = kind_defaults(c.kind);
  if (c.duration_s <= 0) c.duration_s = d.duration_s;
  if (c.target_noise_sd < 0) c.target_noise_sd = d.target_noise_sd;
  if (c.missing_cells < 0) c.missing_cells = d.missing_cells;
  if (c.outlier_spikes < 0) c.outlier_spikes = d.outlier_spikes;
  for (const auto& [key, value] : noise_defaults(c.kind))
    c.channel_noise_sd.emplace(key, value);

  switch (c.kind) {
    case ScenarioConfig::Kind::pig: return generate_pig(c);
    case ScenarioConfig::Kind::salmon: return generate_salmon(c);
    case ScenarioConfig::Kind::mussel: return generate_mussel(c);
  }
  raise(Errc::internal, "unreachable");
}

}  // namespace twinpipe
