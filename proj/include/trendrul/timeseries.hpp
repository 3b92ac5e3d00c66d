#pragma once

#include <cstdint>
#include <vector>

#include "trendrul/errors.hpp"

namespace trendrul {

// A uniformly cycle-indexed sequence of scalar samples for one sensor of
// one engine unit. Sample t lives at cycle start_cycle + t.
struct Series {
  std::vector<double> values;
  int start_cycle = 1;

  Series() = default;
  explicit Series(std::vector<double> v, int start = 1)
      : values(std::move(v)), start_cycle(start) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// Frozen per-sensor min/max, fitted on the training split and reused at
// test time.
struct NormalizationStats {
  double min = 0.0;
  double max = 0.0;
  int sensor = 0;  // 1-based C-MAPSS sensor index

  bool degenerate() const noexcept { return !(max > min); }
};

namespace cmapss {
struct EngineUnit;  // defined in cmapss.hpp
}

// Global min/max of one sensor over all cycles of all provided units.
// Throws SensorDegenerate when max == min.
NormalizationStats fit_normalization(
    const std::vector<cmapss::EngineUnit>& units, int sensor);

// Maps x to 2(x - min)/(max - min) - 1. Test samples outside the training
// range map outside [-1, 1] and are not clipped.
double min_max_normalize(double x, const NormalizationStats& stats);

// Inverse of min_max_normalize.
double denormalize(double y, const NormalizationStats& stats);

Series normalize_series(const Series& s, const NormalizationStats& stats);

// Centered moving average with window T (odd). Boundary windows are
// truncated to valid indices and divided by the actual sample count.
Series sliding_mean(const Series& series, int window = 5);

}  // namespace trendrul
