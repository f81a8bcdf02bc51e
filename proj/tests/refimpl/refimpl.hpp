#pragma once

// Naive direct-definition reference implementations, deliberately independent
// of the optimized kernels in src/: linear scans instead of binary search, no
// OpenMP, textbook formulas. Tests and the benchmark compare against these.

#include <map>
#include <string>
#include <vector>

#include "twinpipe/sensors.hpp"
#include "twinpipe/timeseries.hpp"

namespace refimpl {

using twinpipe::RawChannel;
using twinpipe::TimeGrid;
using twinpipe::Timestamp;
using twinpipe::TriAxialAccel;

std::vector<double> brute_resample(const RawChannel& channel, const TimeGrid& grid,
                                   const twinpipe::ResamplePolicy& policy);

std::map<std::string, std::vector<double>> brute_window_aggregate(
    const RawChannel& channel, const twinpipe::FeatureSpec& spec, const TimeGrid& grid);

/// O(n*w) ODBA straight from the definition: per sample, the centered running
/// mean over [t - w/2, t + w/2) of each axis, then the sum of absolute
/// dynamic components.
RawChannel naive_odba(const TriAxialAccel& accel, std::int64_t static_window_ms);

/// Grid enumeration oracle: row count and per-cell source-sample population
/// for a half-open cell [t, t+period).
struct CellCount {
  Timestamp cell_start;
  std::size_t samples;
};
std::vector<CellCount> enumerate_cells(const RawChannel& channel, const TimeGrid& grid);

/// Interval-intersection grid oracle.
TimeGrid brute_grid(const std::vector<RawChannel>& channels, std::int64_t period_ms);

/// Textbook two-pass mean and sample standard deviation.
void naive_mean_std(const std::vector<double>& values, double& mean, double& std_dev);

/// Normal-equations OLS (with intercept) solved by Gaussian elimination with
/// partial pivoting; independent of the Householder path in src/.
bool naive_ols(const std::vector<std::vector<double>>& features, const std::vector<double>& y,
               double& intercept, std::vector<double>& coefficients);

}  // namespace refimpl
