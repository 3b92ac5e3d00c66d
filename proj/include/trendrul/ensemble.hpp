#pragma once

#include <cstdint>
#include <string>

#include "trendrul/emd.hpp"

namespace trendrul::ensemble {

struct EnsembleConfig {
  int realizations = 100;     // I
  double noise_std = 0.02;    // epsilon_0
  bool adaptive_noise = false;  // epsilon_k = epsilon_0 * std(r_k)
  int max_total_sift_iterations = 5000;
  std::uint64_t base_seed = 0;
};

enum class TrendSource { CEEMD, EEMD };

// Q_v (or E_v): residue plus the v slowest modes.
struct TrendFeature {
  Series values;
  int level = 0;  // v, 0 <= v <= K
  TrendSource source = TrendSource::CEEMD;
};

// Identity of the normal generator, recorded in run manifests so outputs
// are reproducible within one build.
std::string noise_generator_id();

// Deterministic seed for (stage k, realization i).
std::uint64_t stage_seed(std::uint64_t base_seed, int stage, int realization);

// Standard-normal noise for one (stage, realization).
std::vector<double> stage_noise(std::uint64_t base_seed, int stage,
                                int realization, std::size_t n);

// Averages full EMD over noise-perturbed copies x + eps0*w^i, realization i
// seeded with base_seed + i. Realizations with fewer modes contribute zeros
// to the missing high-k modes. Residue is x - sum of averaged modes.
emd::Decomposition eemd(const Series& x, const EnsembleConfig& cfg,
                        const emd::SiftConfig& sift = {});

// Complete ensemble EMD: mode k is the average over realizations of the
// first-mode operator applied to the noise-perturbed running residue, and
// the final residue is x - sum of modes, which makes reconstruction exact
// by construction.
emd::Decomposition ceemd(const Series& x, const EnsembleConfig& cfg,
                         const emd::SiftConfig& sift = {});

// Q_v = R + sum_{k=m}^{K} IMF_k with m = K + 1 - v; Q_0 is the residue.
// Modes are accumulated from k = K downward so partial sums nest exactly.
TrendFeature trend_feature(const emd::Decomposition& d, int v,
                           TrendSource source = TrendSource::CEEMD);

// E_v over the EEMD decomposition of x_norm.
TrendFeature eemd_trend_feature(const Series& x_norm, int v,
                                const EnsembleConfig& cfg,
                                const emd::SiftConfig& sift = {});

}  // namespace trendrul::ensemble
