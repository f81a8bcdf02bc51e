// Benchmark comparing the OpenMP kernels against a single thread: resample,
// window aggregation, ODBA, forest training and prediction.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "twinpipe/model.hpp"
#include "twinpipe/rng.hpp"
#include "twinpipe/sensors.hpp"
#include "twinpipe/timeseries.hpp"

using namespace twinpipe;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RawChannel make_channel(const char* name, std::size_t n, std::int64_t period_ms,
                        std::uint64_t seed) {
  RawChannel ch;
  ch.name = name;
  ch.nominal_rate_hz = Rational(1000, period_ms);
  ch.samples.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    ch.samples[i] = {static_cast<Timestamp>(i) * period_ms, rng.gaussian()};
  return ch;
}

template <typename F>
double time_best_of_3(F&& f) {
  double best = 1e30;
  for (int rep = 0; rep < 3; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

int main() {
  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  std::printf("threads available: %d\n\n", max_threads);
  std::printf("%-28s %12s %12s %8s\n", "kernel", "1 thread", "N threads", "speedup");

  auto row = [&](const char* name, double serial, double parallel) {
    std::printf("%-28s %10.4fs %10.4fs %7.2fx\n", name, serial, parallel,
                parallel > 0 ? serial / parallel : 0.0);
  };

  // resample: 2 M samples at 25 Hz onto a 40 s grid
  {
    RawChannel ch = make_channel("bench.fast", 2'000'000, 40, 11);
    TimeGrid grid{0, 40000, 1999};
    ResamplePolicy policy;
    set_threads(1);
    double serial = time_best_of_3([&] { resample(ch, grid, policy); });
    set_threads(max_threads);
    double parallel = time_best_of_3([&] { resample(ch, grid, policy); });
    row("resample 2M -> 2k cells", serial, parallel);
  }

  // window aggregation: 1 Hz channel, 3-minute windows, four aggregations
  {
    RawChannel ch = make_channel("bench.slow", 1'000'000, 1000, 12);
    TimeGrid grid{180000, 180000, 5554};
    FeatureSpec spec{180000, {Agg::mean, Agg::std_dev, Agg::min, Agg::max}, LabelAlignment::window_end};
    set_threads(1);
    double serial = time_best_of_3([&] { window_aggregate(ch, spec, grid); });
    set_threads(max_threads);
    double parallel = time_best_of_3([&] { window_aggregate(ch, spec, grid); });
    row("window_aggregate 1M x4", serial, parallel);
  }

  // ODBA: 25 Hz tri-axial, 2 s centered window
  {
    TriAxialAccel accel;
    accel.x = make_channel("x", 500'000, 40, 13);
    accel.y = make_channel("y", 500'000, 40, 14);
    accel.z = make_channel("z", 500'000, 40, 15);
    set_threads(1);
    double serial = time_best_of_3([&] { odba(accel, 2000); });
    set_threads(max_threads);
    double parallel = time_best_of_3([&] { odba(accel, 2000); });
    row("odba 500k samples", serial, parallel);
  }

  // forest: 100 trees on 2000 rows x 6 features
  {
    const std::size_t n = 2000;
    Rng rng(99);
    TimeGrid grid{0, 1000, static_cast<std::int64_t>(n)};
    std::vector<TimeTable::Column> cols;
    for (int f = 0; f < 6; ++f) {
      TimeTable::Column c{"f" + std::to_string(f), "", std::vector<double>(n)};
      for (auto& v : c.values) v = rng.gaussian();
      cols.push_back(std::move(c));
    }
    TimeTable::Column target{"y", "", std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i)
      target.values[i] = 2.0 * cols[0].values[i] - cols[1].values[i] +
                         (cols[2].values[i] > 0 ? 3.0 : 0.0) + 0.1 * rng.gaussian();
    cols.push_back(std::move(target));
    TimeTable table(grid, std::move(cols));

    ModelSpec spec;
    spec.kind = ModelSpec::Kind::random_forest;
    spec.target = "y";
    spec.features = {"f0", "f1", "f2", "f3", "f4", "f5"};
    spec.forest.n_trees = 100;
    spec.forest.seed = 7;

    set_threads(1);
    double serial = time_best_of_3([&] { fit_forest(table, spec); });
    set_threads(max_threads);
    double parallel = time_best_of_3([&] { fit_forest(table, spec); });
    row("fit_forest 100x2000", serial, parallel);

    ModelArtifact model = fit_forest(table, spec);
    set_threads(1);
    double pserial = time_best_of_3([&] { predict(model, table); });
    set_threads(max_threads);
    double pparallel = time_best_of_3([&] { predict(model, table); });
    row("predict forest 2000 rows", pserial, pparallel);
  }

  return 0;
}
