#include "trendrul/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trendrul/cmapss.hpp"

namespace trendrul {

NormalizationStats fit_normalization(
    const std::vector<cmapss::EngineUnit>& units, int sensor) {
  if (units.empty()) {
    throw ConfigError("fit_normalization: no units provided");
  }
  const int col = sensor - 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& unit : units) {
    if (col < 0 || col >= unit.sensors.cols()) {
      throw ConfigError("fit_normalization: sensor " + std::to_string(sensor) +
                        " not present in unit " +
                        std::to_string(unit.unit_id));
    }
    lo = std::min(lo, unit.sensors.col(col).minCoeff());
    hi = std::max(hi, unit.sensors.col(col).maxCoeff());
  }
  NormalizationStats stats{lo, hi, sensor};
  if (stats.degenerate()) {
    throw SensorDegenerate("sensor " + std::to_string(sensor) +
                           " has constant value " + std::to_string(lo) +
                           "; it should have been pruned");
  }
  return stats;
}

double min_max_normalize(double x, const NormalizationStats& stats) {
  if (stats.degenerate()) {
    throw SensorDegenerate("degenerate stats for sensor " +
                           std::to_string(stats.sensor));
  }
  return 2.0 * (x - stats.min) / (stats.max - stats.min) - 1.0;
}

double denormalize(double y, const NormalizationStats& stats) {
  if (stats.degenerate()) {
    throw SensorDegenerate("degenerate stats for sensor " +
                           std::to_string(stats.sensor));
  }
  return stats.min + (y + 1.0) * 0.5 * (stats.max - stats.min);
}

Series normalize_series(const Series& s, const NormalizationStats& stats) {
  Series out;
  out.start_cycle = s.start_cycle;
  out.values.reserve(s.size());
  for (double v : s.values) out.values.push_back(min_max_normalize(v, stats));
  return out;
}

Series sliding_mean(const Series& series, int window) {
  if (window < 1 || window % 2 == 0) {
    throw InvalidWindow("sliding_mean window must be odd and >= 1, got " +
                        std::to_string(window));
  }
  const int n = static_cast<int>(series.size());
  const int half = (window - 1) / 2;
  Series out;
  out.start_cycle = series.start_cycle;
  out.values.resize(series.size());
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - half);
    const int hi = std::min(n - 1, t + half);
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) sum += series.values[k];
    out.values[t] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace trendrul
