// Acceptance suite: each criterion runs at a fixed, hard-coded tolerance and
// prints one PASS/FAIL line. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "refimpl.hpp"
#include "twinpipe/csv.hpp"
#include "twinpipe/ingest.hpp"
#include "twinpipe/model.hpp"
#include "twinpipe/quality.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/runner.hpp"
#include "twinpipe/sensors.hpp"
#include "twinpipe/sha256.hpp"
#include "twinpipe/split.hpp"
#include "twinpipe/synth.hpp"
#include "twinpipe/util.hpp"

using namespace twinpipe;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const char* title, bool pass, const std::string& detail) {
  std::printf("%s  criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, title,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("twinpipe_accept_" + tag);
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) { return format_double(v); }

MergeResult merge_scenario(const fs::path& dir) {
  MergeSpec spec = MergeSpec::load((dir / "specs/merge.json").string());
  for (auto& src : spec.sources) src.path = (dir / src.path).string();
  return merge_sources(spec);
}

// ---------------------------------------------------------------------------
// 1. Planted-model recovery through the full pipeline, zero noise, < 10 s.
void criterion_1() {
  const char* title = "planted-model recovery via merge/qc/split/train/report";
  try {
    fs::path dir = fresh_dir("c1");
    ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::pig);
    config.seed = 7;
    config.target_noise_sd = 0.0;
    config.thermo_scale = 0.0;
    config.missing_cells = 0;
    config.outlier_spikes = 0;
    config.out_dir = dir.string();
    GeneratedScenario scenario = generate(config);

    Timer timer;
    PipelineManifest manifest = PipelineManifest::load((dir / "pipeline_linear.json").string());
    json record = run_pipeline(manifest, dir.string());
    double elapsed = timer.seconds();

    ModelArtifact model = load_model((dir / "work/model.json").string());
    const json& planted = scenario.ground_truth["planted"];
    auto rel_err = [](double got, double want) {
      return std::fabs(got - want) / std::max(1e-12, std::fabs(want));
    };
    double worst = rel_err(model.intercept, planted["intercept"].get<double>());
    for (std::size_t j = 0; j < model.spec.features.size(); ++j) {
      double want = planted["coefficients"][model.spec.features[j]].get<double>();
      worst = std::max(worst, rel_err(model.coefficients[j], want));
    }
    bool ok = record["status"] == "ok" && worst <= 1e-6 && elapsed < 10.0;
    report(1, title, ok,
           "max relative coefficient error " + fmt(worst) + ", runtime " + fmt(elapsed) + " s");
  } catch (const std::exception& e) {
    report(1, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 2. Forest beats linear with test R2 >= 0.85 on the nonlinear pig scenario;
//    at least 4 of 5 seeds, < 60 s total.
void criterion_2() {
  const char* title = "forest quality on the piecewise-temperature pig scenario";
  try {
    Timer timer;
    int passed = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      fs::path dir = fresh_dir("c2_" + std::to_string(seed));
      ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::pig);
      config.seed = seed;
      // default noise and thermoneutral structure on a longer recording, so
      // the forest has enough labels per temperature condition to learn from
      config.duration_s = 64800;
      config.out_dir = dir.string();
      generate(config);

      MergeResult merged = merge_scenario(dir);
      QualityResult qc =
          quality_check(merged.table, QualitySpec::load((dir / "specs/quality.json").string()));
      SplitResult parts = split(qc.table, SplitSpec::load((dir / "specs/split.json").string()));

      ModelSpec forest_spec = ModelSpec::load((dir / "specs/model_forest.json").string());
      ModelSpec linear_spec = ModelSpec::load((dir / "specs/model_linear.json").string());
      ModelArtifact forest = fit_forest(parts.train, forest_spec);
      ModelArtifact linear = fit_linear(parts.train, linear_spec);

      const auto& actual = parts.test.column(forest_spec.target).values;
      Metrics mf = evaluate(predict(forest, parts.test).values, actual);
      Metrics ml = evaluate(predict(linear, parts.test).values, actual);
      bool seed_ok = mf.r2_defined && mf.r2 >= 0.85 && mf.rmse < ml.rmse;
      if (seed_ok) ++passed;
      detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) +
                ": forest R2 " + fmt(mf.r2) + ", rmse " + fmt(mf.rmse) + " vs linear " +
                fmt(ml.rmse);
    }
    double elapsed = timer.seconds();
    bool ok = passed >= 4 && elapsed < 60.0;
    report(2, title, ok,
           std::to_string(passed) + "/5 seeds, runtime " + fmt(elapsed) + " s [" + detail + "]");
  } catch (const std::exception& e) {
    report(2, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 3. Salmon rate reconciliation vs the brute-force grid enumerator.
void criterion_3() {
  const char* title = "salmon 25 Hz / 1 Hz reconciliation onto the 40 s grid";
  try {
    fs::path dir = fresh_dir("c3");
    ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::salmon);
    config.seed = 3;
    config.out_dir = dir.string();
    generate(config);

    MergeResult merged = merge_scenario(dir);

    // independent oracle: re-parse the raw files and enumerate the grid
    auto parse_one = [&](const char* file, const char* channel, const char* column,
                         const char* rate) {
      json j;
      j["path"] = (dir / file).string();
      j["channel_name"] = channel;
      j["timestamp_column"] = "t";
      j["value_columns"] = json::array({column});
      j["timestamp_format"] = "epoch_ms";
      j["nominal_rate_hz"] = rate;
      return parse_csv((dir / file).string(), SourceDescriptor::from_json(j)).channels[0];
    };
    RawChannel odba_ch = parse_one("odba.csv", "tag", "odba", "25");
    RawChannel do_ch = parse_one("do.csv", "tank", "do", "1");
    RawChannel mo2_ch = parse_one("mo2.csv", "resp", "mo2", "1/40");

    TimeGrid oracle = refimpl::brute_grid({odba_ch, do_ch, mo2_ch}, 40000);
    bool ok = merged.table.row_count() == static_cast<std::size_t>(oracle.count) &&
              merged.table.grid().start == oracle.start;
    std::string detail = "rows " + std::to_string(merged.table.row_count()) + " vs enumerated " +
                         std::to_string(oracle.count);

    // fill fraction 1.0 for both reconciled channels
    for (const auto& ch : merged.report["channels"]) {
      std::string name = ch["channel"].get<std::string>();
      if (name == "tag.odba" || name == "tank.do")
        for (const auto& col : ch["columns"])
          if (col["fill_fraction"].get<double>() != 1.0) {
            ok = false;
            detail += "; fill<1 for " + name;
          }
    }

    // cell-by-cell agreement: windowed odba mean and downsampled do mean
    FeatureSpec odba_spec{40000, {Agg::mean}, LabelAlignment::window_end};
    auto ref_odba = refimpl::brute_window_aggregate(odba_ch, odba_spec, oracle).at("tag.odba_mean");
    ResamplePolicy mean_policy;
    auto ref_do = refimpl::brute_resample(do_ch, oracle, mean_policy);
    const auto& got_odba = merged.table.column("tag.odba_mean").values;
    const auto& got_do = merged.table.column("tank.do").values;
    double worst = 0.0;
    for (std::size_t i = 0; i < got_odba.size(); ++i) {
      worst = std::max(worst, std::fabs(got_odba[i] - ref_odba[i]));
      worst = std::max(worst, std::fabs(got_do[i] - ref_do[i]));
    }
    if (worst > 1e-9) ok = false;
    detail += "; worst cell deviation " + fmt(worst);

    // each 40 s cell of the 25 Hz stream holds exactly 1000 samples
    for (const auto& cell : refimpl::enumerate_cells(odba_ch, oracle))
      if (cell.samples != 1000) {
        ok = false;
        detail += "; cell population " + std::to_string(cell.samples);
        break;
      }
    report(3, title, ok, detail);
  } catch (const std::exception& e) {
    report(3, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 4. ODBA vs the naive direct definition, 1e-12 on 1000 random samples;
//    constant input exactly zero.
void criterion_4() {
  const char* title = "ODBA matches the naive direct-definition oracle";
  try {
    Rng rng(4242);
    TriAxialAccel accel;
    for (RawChannel* ch : {&accel.x, &accel.y, &accel.z}) {
      ch->nominal_rate_hz = Rational(25, 1);
      ch->unit = "m/s2";
    }
    accel.x.name = "x";
    accel.y.name = "y";
    accel.z.name = "z";
    for (int i = 0; i < 1000; ++i) {
      Timestamp t = i * 40;
      double ts = static_cast<double>(t) / 1000.0;
      accel.x.samples.push_back({t, 0.8 * std::sin(2.3 * ts) + 0.1 * rng.gaussian()});
      accel.y.samples.push_back({t, 0.5 * std::sin(1.1 * ts + 1.0) + 0.1 * rng.gaussian()});
      accel.z.samples.push_back({t, 9.81 + 0.6 * std::sin(0.7 * ts) + 0.1 * rng.gaussian()});
    }
    RawChannel mine = odba(accel, 2000);
    RawChannel ref = refimpl::naive_odba(accel, 2000);
    double worst = 0.0;
    for (std::size_t i = 0; i < mine.samples.size(); ++i)
      worst = std::max(worst, std::fabs(mine.samples[i].value - ref.samples[i].value));

    TriAxialAccel flat;
    for (RawChannel* ch : {&flat.x, &flat.y, &flat.z}) ch->nominal_rate_hz = Rational(25, 1);
    flat.x.name = "x";
    flat.y.name = "y";
    flat.z.name = "z";
    for (int i = 0; i < 200; ++i) {
      flat.x.samples.push_back({i * 40, 0.37});
      flat.y.samples.push_back({i * 40, -1.29});
      flat.z.samples.push_back({i * 40, 9.81});
    }
    RawChannel flat_out = odba(flat, 2000);
    bool flat_zero = true;
    for (const auto& s : flat_out.samples)
      if (s.value != 0.0) flat_zero = false;

    bool ok = worst <= 1e-12 && flat_zero;
    report(4, title, ok,
           "max |impl - naive| " + fmt(worst) + ", constant input " +
               (flat_zero ? "exactly 0" : "NOT zero"));
  } catch (const std::exception& e) {
    report(4, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 5. Mussel fault audit: every planted spike flagged, every missing cell
//    counted, zero false positives on the clean variant.
void criterion_5() {
  const char* title = "mussel quality oracle (planted faults, clean variant)";
  try {
    fs::path dir = fresh_dir("c5");
    ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::mussel);
    config.seed = 5;
    config.out_dir = dir.string();
    GeneratedScenario scenario = generate(config);

    MergeResult merged = merge_scenario(dir);
    QualitySpec qspec = QualitySpec::load((dir / "specs/quality.json").string());
    auto masks = detect_outliers(merged.table, qspec);
    QualityResult qc = quality_check(merged.table, qspec);

    bool ok = merged.table.row_count() == 90;
    std::string detail = "rows " + std::to_string(merged.table.row_count());

    // planted spikes: flagged, and nothing else is
    std::size_t planted_spikes = scenario.ground_truth["faults"]["spikes"].size();
    std::size_t flagged_total = 0;
    for (const auto& [name, mask] : masks)
      for (bool f : mask)
        if (f) ++flagged_total;
    for (const auto& spike : scenario.ground_truth["faults"]["spikes"]) {
      std::string channel = spike["channel"].get<std::string>();
      std::size_t row = spike["row"].get<std::size_t>();
      if (!masks.at(channel)[row]) {
        ok = false;
        detail += "; spike at " + channel + "[" + std::to_string(row) + "] not flagged";
      }
    }
    if (flagged_total != planted_spikes) {
      ok = false;
      detail += "; flagged " + std::to_string(flagged_total) + " != planted " +
                std::to_string(planted_spikes);
    } else {
      detail += "; all " + std::to_string(planted_spikes) + " spikes flagged exactly";
    }

    // planted missing cells: counted exactly
    std::map<std::string, std::size_t> want_missing;
    for (const auto& m : scenario.ground_truth["faults"]["missing"])
      want_missing[m["channel"].get<std::string>()]++;
    std::size_t total_missing_before = 0;
    for (const auto& [name, cq] : qc.report.columns) {
      total_missing_before += cq.missing_before;
      auto it = want_missing.find(name);
      std::size_t want = it == want_missing.end() ? 0 : it->second;
      if (cq.missing_before != want) {
        ok = false;
        detail += "; " + name + " missing " + std::to_string(cq.missing_before) + " != " +
                  std::to_string(want);
      }
    }
    detail += "; " + std::to_string(total_missing_before) + " missing cells counted";

    // clean variant: zero flags with the same default spec
    fs::path clean_dir = fresh_dir("c5_clean");
    ScenarioConfig clean = config;
    clean.missing_cells = 0;
    clean.outlier_spikes = 0;
    clean.out_dir = clean_dir.string();
    generate(clean);
    MergeResult clean_merged = merge_scenario(clean_dir);
    auto clean_masks = detect_outliers(clean_merged.table, qspec);
    std::size_t false_positives = 0;
    for (const auto& [name, mask] : clean_masks)
      for (bool f : mask)
        if (f) ++false_positives;
    if (false_positives != 0) ok = false;
    detail += "; clean variant false positives " + std::to_string(false_positives);

    report(5, title, ok, detail);
  } catch (const std::exception& e) {
    report(5, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 6. Reproducibility: identical digests across reruns, and a predict-only
//    replay from the saved artifact reproduces the report's predictions.
void criterion_6() {
  const char* title = "byte-identical reruns and predict-only replay";
  try {
    fs::path dir1 = fresh_dir("c6_a");
    fs::path dir2 = fresh_dir("c6_b");
    for (const fs::path* dir : {&dir1, &dir2}) {
      ScenarioConfig config = ScenarioConfig::defaults(ScenarioConfig::Kind::pig);
      config.duration_s = 5400;
      config.seed = 6;
      config.out_dir = dir->string();
      generate(config);
    }
    json r1 = run_pipeline(PipelineManifest::load((dir1 / "pipeline_forest.json").string()),
                           dir1.string());
    json r2 = run_pipeline(PipelineManifest::load((dir2 / "pipeline_forest.json").string()),
                           dir2.string());

    bool ok = true;
    std::string detail;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < r1["steps"].size(); ++i) {
      auto o1 = r1["steps"][i]["outputs"];
      auto o2 = r2["steps"][i]["outputs"];
      auto it1 = o1.begin();
      auto it2 = o2.begin();
      for (; it1 != o1.end() && it2 != o2.end(); ++it1, ++it2, ++compared)
        if (it1.value() != it2.value()) {
          ok = false;
          detail += "; digest differs for " + fs::path(it1.key()).filename().string();
        }
    }
    detail = std::to_string(compared) + " step outputs compared (report.md included)" + detail;

    // third run: predict-only replay of the report's embedded manifest
    json report_doc = json::parse(read_file((dir1 / "work/report.json").string()));
    PipelineManifest reapply = PipelineManifest::from_json(report_doc["reapply_manifest"]);
    json r3 = run_pipeline(reapply, dir1.string());
    if (r3["status"] != "ok") ok = false;

    // predictions from the replay match the report's embedded series bitwise
    TimeTable replay = read_table_csv((dir1 / "reapply/predictions.csv").string());
    const auto& got = replay.column("predicted").values;
    const json& series = report_doc["series"]["predicted"];
    if (got.size() != series.size()) {
      ok = false;
      detail += "; replay length mismatch";
    } else {
      for (std::size_t i = 0; i < got.size(); ++i) {
        bool was_null = series[i].is_null();
        if (was_null != is_missing(got[i]) ||
            (!was_null && series[i].get<double>() != got[i])) {
          ok = false;
          detail += "; replay prediction differs at row " + std::to_string(i);
          break;
        }
      }
    }
    // and byte-for-byte against the training run's predictions file
    if (sha256_file((dir1 / "reapply/predictions.csv").string()) !=
        sha256_file((dir1 / "work/predictions.csv").string())) {
      ok = false;
      detail += "; replay CSV differs from the training-run CSV";
    }
    report(6, title, ok, detail);
  } catch (const std::exception& e) {
    report(6, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 7. Forest training with 1 thread and N threads gives identical hashes.
void criterion_7() {
  const char* title = "thread-count invariant forest training";
  try {
    Rng rng(70);
    const std::size_t n = 300;
    std::vector<double> a(n), b(n), c(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.gaussian();
      b[i] = rng.gaussian();
      c[i] = rng.gaussian();
      y[i] = 2 * a[i] + (b[i] > 0 ? 3.0 : 0.0) - c[i] + 0.2 * rng.gaussian();
    }
    TimeGrid grid{0, 1000, static_cast<std::int64_t>(n)};
    TimeTable table(grid, {{"a", "", a}, {"b", "", b}, {"c", "", c}, {"y", "", y}});
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::random_forest;
    spec.target = "y";
    spec.features = {"a", "b", "c"};
    spec.forest.n_trees = 60;

    bool ok = true;
    std::string detail;
#ifdef _OPENMP
    int max_threads = omp_get_num_procs();
#else
    int max_threads = 1;
#endif
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      spec.forest.seed = seed;
#ifdef _OPENMP
      omp_set_num_threads(1);
#endif
      std::string h1 = fit_forest(table, spec).content_hash();
#ifdef _OPENMP
      omp_set_num_threads(max_threads);
#endif
      std::string hn = fit_forest(table, spec).content_hash();
      if (h1 != hn) {
        ok = false;
        detail += "; seed " + std::to_string(seed) + " differs";
      }
    }
    report(7, title, ok,
           "3 seeds, 1 vs " + std::to_string(max_threads) + " threads" + detail);
  } catch (const std::exception& e) {
    report(7, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 8. Chronological split contract on all three scenarios + the 600-row cut.
void criterion_8() {
  const char* title = "chronological split contract";
  try {
    bool ok = true;
    std::string detail;
    for (auto kind : {ScenarioConfig::Kind::pig, ScenarioConfig::Kind::salmon,
                      ScenarioConfig::Kind::mussel}) {
      ScenarioConfig config = ScenarioConfig::defaults(kind);
      config.seed = 8;
      fs::path dir = fresh_dir(std::string("c8_") + config.kind_name());
      config.out_dir = dir.string();
      generate(config);
      MergeResult merged = merge_scenario(dir);
      QualityResult qc =
          quality_check(merged.table, QualitySpec::load((dir / "specs/quality.json").string()));
      SplitResult parts = split(qc.table, SplitSpec::load((dir / "specs/split.json").string()));
      if (!(parts.train.timestamps().back() < parts.test.timestamps().front())) {
        ok = false;
        detail += std::string("; ") + config.kind_name() + " violates the time ordering";
      }
    }

    TimeGrid grid{0, 1000, 600};
    std::vector<double> y(600);
    for (std::size_t i = 0; i < 600; ++i) y[i] = static_cast<double>(i);
    TimeTable table(grid, {{"y", "", y}});
    SplitSpec spec;
    spec.mode = SplitSpec::Mode::chronological;
    spec.train_fraction = Rational(5, 6);
    spec.target_column = "y";
    SplitResult parts = split(table, spec);
    if (parts.train.row_count() != 500 || parts.test.row_count() != 100) ok = false;
    detail = "600 rows at 5/6 -> " + std::to_string(parts.train.row_count()) + "/" +
             std::to_string(parts.test.row_count()) + detail;
    report(8, title, ok, detail);
  } catch (const std::exception& e) {
    report(8, title, false, e.what());
  }
}

// ---------------------------------------------------------------------------
// 9. evaluate() vs hand-computed metrics on 10 fixed vectors, 1e-12.
void criterion_9() {
  const char* title = "metrics oracle on 10 fixed vectors";
  struct Case {
    std::vector<double> pred, actual;
    double mae, rmse, r2;
    bool r2_defined;
  };
  try {
    const std::vector<Case> cases = {
        {{1, 2}, {2, 4}, 1.5, std::sqrt(2.5), -1.5, true},
        {{1, 2, 3}, {1, 2, 3}, 0.0, 0.0, 1.0, true},
        {{2, 2, 2}, {1, 2, 3}, 2.0 / 3.0, std::sqrt(2.0 / 3.0), 0.0, true},
        {{0}, {5}, 5.0, 5.0, 0.0, false},
        {{5, 5}, {5, 5}, 0.0, 0.0, 1.0, true},
        {{1, 1, 1, 1}, {0, 2, 0, 2}, 1.0, 1.0, 0.0, true},
        {{3, 1}, {1, 3}, 2.0, 2.0, -3.0, true},
        {{1.5, 2.5, 3.5}, {1, 2, 3}, 0.5, 0.5, 0.625, true},
        {{10, 20, 30, 40}, {10, 20, 30, 40}, 0.0, 0.0, 1.0, true},
        {{0, 0, 0}, {1, 4, 7}, 4.0, std::sqrt(22.0), 1.0 - 66.0 / 18.0, true},
    };
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      Metrics m = evaluate(cases[i].pred, cases[i].actual);
      bool case_ok = std::fabs(m.mae - cases[i].mae) <= 1e-12 &&
                     std::fabs(m.rmse - cases[i].rmse) <= 1e-12 &&
                     m.r2_defined == cases[i].r2_defined &&
                     (!cases[i].r2_defined || std::fabs(m.r2 - cases[i].r2) <= 1e-12) &&
                     m.mae <= m.rmse + 1e-15;
      if (!case_ok) {
        ok = false;
        detail += "; case " + std::to_string(i + 1) + " off";
      }
    }
    report(9, title, ok, ok ? "10/10 within 1e-12" : detail);
  } catch (const std::exception& e) {
    report(9, title, false, e.what());
  }
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (failures == 0)
    std::printf("all 9 criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", failures);
  return failures;
}
