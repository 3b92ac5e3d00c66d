#include "trendrul/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace trendrul::metrics {

namespace {

double gaussian_density(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw InvalidSigma("sigma must be positive, got " + std::to_string(sigma));
  }
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Looks up the per-cycle model for one unit and checks coverage.
const std::vector<double>& track_column(
    const std::map<int, std::vector<double>>& column, int unit_id,
    std::size_t cycles) {
  const auto it = column.find(unit_id);
  if (it == column.end() || it->second.size() < cycles) {
    throw CoverageError("distribution track does not cover unit " +
                        std::to_string(unit_id));
  }
  return it->second;
}

}  // namespace

double phm_score(const std::vector<double>& predicted,
                 const std::vector<double>& truth, const ScoreConfig& cfg) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("phm_score requires equal-length inputs");
  }
  if (predicted.empty()) {
    throw EmptyInput("phm_score requires at least one prediction");
  }
  double s = 0.0;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    const double d = predicted[p] - truth[p];
    s += d < 0.0 ? std::exp(-d / cfg.a_early) - 1.0
                 : std::exp(d / cfg.a_late) - 1.0;
  }
  return s;
}

double rmse(const std::vector<double>& predicted,
            const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("rmse requires equal-length inputs");
  }
  if (predicted.empty()) {
    throw EmptyInput("rmse requires at least one prediction");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    const double d = predicted[p] - truth[p];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double mpd(const std::map<int, Series>& features,
           const DistributionTrack& track) {
  if (features.empty()) {
    throw EmptyInput("mpd requires at least one unit");
  }
  double unit_sum = 0.0;
  for (const auto& [unit_id, series] : features) {
    const auto& mu = track_column(track.mean, unit_id, series.size());
    const auto& sigma = track_column(track.stddev, unit_id, series.size());
    double cycle_sum = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
      cycle_sum += gaussian_density(series.values[t], mu[t], sigma[t]);
    }
    unit_sum += cycle_sum / static_cast<double>(series.size());
  }
  return unit_sum / static_cast<double>(features.size());
}

double mare(const std::map<int, Series>& features,
            const DistributionTrack& track) {
  if (features.empty()) {
    throw EmptyInput("mare requires at least one unit");
  }
  double unit_sum = 0.0;
  for (const auto& [unit_id, series] : features) {
    const auto& mu = track_column(track.mean, unit_id, series.size());
    double cycle_sum = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
      cycle_sum += std::abs(series.values[t] - mu[t]);
    }
    unit_sum += cycle_sum / static_cast<double>(series.size());
  }
  return unit_sum / static_cast<double>(features.size());
}

DistributionTrack baseline_distribution(const std::map<int, Series>& training,
                                        int bins) {
  if (training.size() < 2) {
    throw EmptyInput(
        "baseline_distribution requires at least 2 training units");
  }
  if (bins < 1) {
    throw ConfigError("baseline_distribution requires bins >= 1");
  }
  for (const auto& [unit_id, series] : training) {
    if (series.size() < 1) {
      throw EmptyInput("unit " + std::to_string(unit_id) + " is empty");
    }
  }

  const auto bin_of = [bins](std::size_t t, std::size_t len) {
    const double frac =
        static_cast<double>(t + 1) / static_cast<double>(len);
    const int idx = static_cast<int>(std::floor(frac * bins));
    return std::clamp(idx, 0, bins - 1);
  };

  // Pool every unit's values per lifetime-fraction bin.
  std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(bins), 0.0);
  std::vector<int> count(static_cast<std::size_t>(bins), 0);
  for (const auto& [unit_id, series] : training) {
    for (std::size_t t = 0; t < series.size(); ++t) {
      const auto b = static_cast<std::size_t>(bin_of(t, series.size()));
      sum[b] += series.values[t];
      sum_sq[b] += series.values[t] * series.values[t];
      ++count[b];
    }
  }

  std::vector<double> bin_mean(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> bin_sigma(static_cast<std::size_t>(bins), kSigmaFloor);
  std::vector<bool> populated(static_cast<std::size_t>(bins), false);
  for (int b = 0; b < bins; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (count[bi] >= 2) {
      populated[bi] = true;
      const double n = count[bi];
      bin_mean[bi] = sum[bi] / n;
      const double var =
          std::max(0.0, sum_sq[bi] / n - bin_mean[bi] * bin_mean[bi]);
      bin_sigma[bi] = std::max(kSigmaFloor, std::sqrt(var));
    }
  }
  // Underpopulated bins borrow their nearest populated neighbor (ties go to
  // the lower index).
  for (int b = 0; b < bins; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (populated[bi]) continue;
    int best = -1;
    for (int other = 0; other < bins; ++other) {
      if (!populated[static_cast<std::size_t>(other)]) continue;
      if (best < 0 ||
          std::abs(other - b) < std::abs(best - b)) {
        best = other;
      }
    }
    if (best < 0) {
      throw EmptyInput("no populated bins; not enough training samples");
    }
    bin_mean[bi] = bin_mean[static_cast<std::size_t>(best)];
    bin_sigma[bi] = bin_sigma[static_cast<std::size_t>(best)];
  }

  DistributionTrack track;
  for (const auto& [unit_id, series] : training) {
    auto& mu = track.mean[unit_id];
    auto& sigma = track.stddev[unit_id];
    mu.resize(series.size());
    sigma.resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
      const auto b = static_cast<std::size_t>(bin_of(t, series.size()));
      mu[t] = bin_mean[b];
      sigma[t] = bin_sigma[b];
    }
  }
  return track;
}

}  // namespace trendrul::metrics
