#include "trendrul/ensemble.hpp"

#include <cmath>
#include <random>
#include <string>

#include "trendrul/errors.hpp"

namespace trendrul::ensemble {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<double> normals(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(gen);
  return out;
}

double max_abs(const std::vector<double>& v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst;
}

double stddev(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

std::string noise_generator_id() {
  return "mt19937_64/std::normal_distribution";
}

std::uint64_t stage_seed(std::uint64_t base_seed, int stage, int realization) {
  const std::uint64_t mixed =
      splitmix64(splitmix64(static_cast<std::uint64_t>(stage)) ^
                 static_cast<std::uint64_t>(realization));
  return base_seed ^ mixed;
}

std::vector<double> stage_noise(std::uint64_t base_seed, int stage,
                                int realization, std::size_t n) {
  return normals(stage_seed(base_seed, stage, realization), n);
}

emd::Decomposition eemd(const Series& x, const EnsembleConfig& cfg,
                        const emd::SiftConfig& sift) {
  if (cfg.realizations < 1) {
    throw ConfigError("eemd requires at least one realization");
  }
  if (cfg.noise_std == 0.0) {
    // Zero noise collapses the ensemble to plain EMD exactly.
    return emd::emd(x, sift, cfg.max_total_sift_iterations);
  }
  const std::size_t n = x.size();
  std::vector<std::vector<double>> mode_sums;  // grows with deepest K seen
  for (int i = 1; i <= cfg.realizations; ++i) {
    const std::vector<double> w = normals(cfg.base_seed + static_cast<std::uint64_t>(i), n);
    Series noisy = x;
    for (std::size_t t = 0; t < n; ++t) noisy.values[t] += cfg.noise_std * w[t];
    const emd::Decomposition d =
        emd::emd(noisy, sift, cfg.max_total_sift_iterations);
    if (d.imfs.size() > mode_sums.size()) {
      mode_sums.resize(d.imfs.size(), std::vector<double>(n, 0.0));
    }
    // Realizations with fewer modes contribute zeros to the missing ones.
    for (std::size_t k = 0; k < d.imfs.size(); ++k) {
      for (std::size_t t = 0; t < n; ++t) {
        mode_sums[k][t] += d.imfs[k].values[t];
      }
    }
  }

  emd::Decomposition out;
  out.source_length = static_cast<int>(n);
  std::vector<double> mode_total(n, 0.0);
  for (auto& sum : mode_sums) {
    Series mode;
    mode.start_cycle = x.start_cycle;
    mode.values.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      mode.values[t] = sum[t] / static_cast<double>(cfg.realizations);
      mode_total[t] += mode.values[t];
    }
    out.imfs.push_back(std::move(mode));
  }
  out.residue.start_cycle = x.start_cycle;
  out.residue.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.residue.values[t] = x.values[t] - mode_total[t];
  }
  return out;
}

emd::Decomposition ceemd(const Series& x, const EnsembleConfig& cfg,
                         const emd::SiftConfig& sift) {
  if (cfg.realizations < 1) {
    throw ConfigError("ceemd requires at least one realization");
  }
  if (x.size() < 3) {
    throw ShapeError("ceemd requires a series of length >= 3");
  }
  if (cfg.noise_std == 0.0) {
    return emd::emd(x, sift, cfg.max_total_sift_iterations);
  }

  const std::size_t n = x.size();
  const int realizations = cfg.realizations;
  int budget = cfg.max_total_sift_iterations;

  emd::Decomposition out;
  out.source_length = static_cast<int>(n);
  Series running = x;
  const double negligible = 1e-12 * max_abs(x.values);

  for (int stage = 1;; ++stage) {
    if (!emd::is_decomposable(running)) break;
    if (max_abs(running.values) <= negligible) break;
    if (budget < realizations) break;  // every realization needs 1 iteration

    const double eps = cfg.adaptive_noise
                           ? cfg.noise_std * stddev(running.values)
                           : cfg.noise_std;
    std::vector<double> mode_sum(n, 0.0);
    int failures = 0;
    for (int i = 1; i <= realizations; ++i) {
      const std::vector<double> w = stage_noise(cfg.base_seed, stage, i, n);
      Series perturbed = running;
      for (std::size_t t = 0; t < n; ++t) {
        perturbed.values[t] += eps * w[t];
      }
      if (!emd::is_decomposable(perturbed)) {
        ++failures;  // contributes a zero mode
        continue;
      }
      // Keep one iteration in reserve for each remaining realization.
      const int reserve = realizations - i;
      const emd::SiftResult first =
          emd::extract_imf_budgeted(perturbed, sift, budget - reserve);
      budget -= first.iterations_used;
      for (std::size_t t = 0; t < n; ++t) {
        mode_sum[t] += first.imf.values[t];
      }
    }
    if (2 * failures > realizations) break;  // majority vote: stop the cascade

    Series mode;
    mode.start_cycle = x.start_cycle;
    mode.values.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      mode.values[t] = mode_sum[t] / static_cast<double>(realizations);
    }
    for (std::size_t t = 0; t < n; ++t) {
      running.values[t] -= mode.values[t];
    }
    out.imfs.push_back(std::move(mode));
  }

  // Final residue from the reconstruction identity, which holds exactly by
  // this definition.
  std::vector<double> mode_total(n, 0.0);
  for (const auto& mode : out.imfs) {
    for (std::size_t t = 0; t < n; ++t) mode_total[t] += mode.values[t];
  }
  out.residue.start_cycle = x.start_cycle;
  out.residue.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.residue.values[t] = x.values[t] - mode_total[t];
  }
  return out;
}

TrendFeature trend_feature(const emd::Decomposition& d, int v,
                           TrendSource source) {
  const int K = static_cast<int>(d.imfs.size());
  if (v < 0 || v > K) {
    throw LevelOutOfRange("trend level v must satisfy 0 <= v <= " +
                          std::to_string(K) + ", got " + std::to_string(v));
  }
  TrendFeature out;
  out.level = v;
  out.source = source;
  out.values = d.residue;
  // Accumulate from the slowest mode downward so Q_{v1} is a running
  // partial sum of Q_{v2} for v1 < v2.
  for (int k = K - 1; k >= K - v; --k) {
    const auto& imf = d.imfs[static_cast<std::size_t>(k)];
    for (std::size_t t = 0; t < out.values.size(); ++t) {
      out.values.values[t] += imf.values[t];
    }
  }
  return out;
}

TrendFeature eemd_trend_feature(const Series& x_norm, int v,
                                const EnsembleConfig& cfg,
                                const emd::SiftConfig& sift) {
  return trend_feature(eemd(x_norm, cfg, sift), v, TrendSource::EEMD);
}

}  // namespace trendrul::ensemble
