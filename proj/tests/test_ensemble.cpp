#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "trendrul/ensemble.hpp"

using namespace trendrul;
using namespace trendrul::ensemble;
using testutil::kPi;

namespace {

double total_variation(const std::vector<double>& v) {
  double tv = 0.0;
  for (std::size_t t = 1; t < v.size(); ++t) {
    tv += std::abs(v[t] - v[t - 1]);
  }
  return tv;
}

bool same_decomposition(const emd::Decomposition& a,
                        const emd::Decomposition& b) {
  if (a.imfs.size() != b.imfs.size()) return false;
  for (std::size_t k = 0; k < a.imfs.size(); ++k) {
    if (a.imfs[k].values != b.imfs[k].values) return false;
  }
  return a.residue.values == b.residue.values;
}

}  // namespace

TEST_CASE("eemd with zero noise collapses to plain emd") {
  const Series s = testutil::mixed_signal(256, 5);
  EnsembleConfig cfg;
  cfg.noise_std = 0.0;
  cfg.realizations = 7;
  const emd::Decomposition ens = eemd(s, cfg);
  const emd::Decomposition plain = emd::emd(s, {}, cfg.max_total_sift_iterations);
  CHECK(same_decomposition(ens, plain));
}

TEST_CASE("eemd with one realization decomposes a single noisy copy") {
  const Series s = testutil::mixed_signal(200, 6);
  EnsembleConfig cfg;
  cfg.realizations = 1;
  cfg.noise_std = 0.02;
  cfg.base_seed = 42;
  const emd::Decomposition ens = eemd(s, cfg);

  // Rebuild the sole noisy realization with the documented seeding rule.
  std::mt19937_64 gen(cfg.base_seed + 1);
  std::normal_distribution<double> dist(0.0, 1.0);
  Series noisy = s;
  for (double& v : noisy.values) v += cfg.noise_std * dist(gen);
  const emd::Decomposition direct =
      emd::emd(noisy, {}, cfg.max_total_sift_iterations);
  REQUIRE(ens.imfs.size() == direct.imfs.size());
  for (std::size_t k = 0; k < ens.imfs.size(); ++k) {
    CHECK(testutil::max_abs_diff(ens.imfs[k].values, direct.imfs[k].values) <=
          1e-12);
  }
}

TEST_CASE("eemd is deterministic for a fixed seed") {
  const Series s = testutil::mixed_signal(200, 8);
  EnsembleConfig cfg;
  cfg.realizations = 5;
  cfg.base_seed = 1234;
  CHECK(same_decomposition(eemd(s, cfg), eemd(s, cfg)));
}

TEST_CASE("ceemd with zero noise equals emd mode for mode") {
  const Series s = testutil::mixed_signal(256, 9);
  EnsembleConfig cfg;
  cfg.noise_std = 0.0;
  cfg.realizations = 11;
  const emd::Decomposition ens = ceemd(s, cfg);
  const emd::Decomposition plain = emd::emd(s, {}, cfg.max_total_sift_iterations);
  CHECK(same_decomposition(ens, plain));
}

TEST_CASE("ceemd reconstruction identity") {
  for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
    const Series s = testutil::mixed_signal(300, seed);
    EnsembleConfig cfg;
    cfg.realizations = 20;
    cfg.base_seed = seed;
    const emd::Decomposition d = ceemd(s, cfg);
    std::vector<double> rebuilt = d.residue.values;
    for (const auto& imf : d.imfs) {
      for (std::size_t t = 0; t < rebuilt.size(); ++t) {
        rebuilt[t] += imf.values[t];
      }
    }
    CHECK(testutil::max_abs_diff(rebuilt, s.values) <= 1e-9);
  }
}

TEST_CASE("ceemd recovers a known trend under tone and noise") {
  const std::size_t n = 400;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.02);
  Series trend = testutil::ramp(n, -1.0, 1.0);
  Series s = trend;
  for (std::size_t t = 0; t < n; ++t) {
    s.values[t] += 0.15 * std::sin(2.0 * kPi * 20.0 * static_cast<double>(t) /
                                   static_cast<double>(n)) +
                   noise(rng);
  }
  EnsembleConfig cfg;
  cfg.realizations = 100;
  cfg.noise_std = 0.02;
  cfg.base_seed = 7;
  const emd::Decomposition d = ceemd(s, cfg);
  const TrendFeature q0 = trend_feature(d, 0);
  CHECK(testutil::pearson(q0.values.values, trend.values) >= 0.99);
}

TEST_CASE("ceemd is deterministic for a fixed seed") {
  const Series s = testutil::mixed_signal(200, 55);
  EnsembleConfig cfg;
  cfg.realizations = 8;
  cfg.base_seed = 99;
  CHECK(same_decomposition(ceemd(s, cfg), ceemd(s, cfg)));
}

TEST_CASE("different seeds give different ensembles") {
  const Series s = testutil::mixed_signal(200, 56);
  EnsembleConfig a, b;
  a.realizations = b.realizations = 6;
  a.base_seed = 1;
  b.base_seed = 2;
  CHECK_FALSE(same_decomposition(ceemd(s, a), ceemd(s, b)));
}

TEST_CASE("trend_feature levels nest exactly") {
  const Series s = testutil::mixed_signal(300, 64);
  EnsembleConfig cfg;
  cfg.realizations = 10;
  cfg.base_seed = 5;
  const emd::Decomposition d = ceemd(s, cfg);
  const int K = static_cast<int>(d.imfs.size());
  REQUIRE(K >= 2);

  // Q_0 is the residue verbatim.
  CHECK(trend_feature(d, 0).values.values == d.residue.values);

  // Q_K reproduces the signal.
  CHECK(testutil::max_abs_diff(trend_feature(d, K).values.values, s.values) <=
        1e-9);

  // Q_1 = R + IMF_K.
  std::vector<double> expected = d.residue.values;
  for (std::size_t t = 0; t < expected.size(); ++t) {
    expected[t] += d.imfs[static_cast<std::size_t>(K - 1)].values[t];
  }
  CHECK(trend_feature(d, 1).values.values == expected);

  // Adding the intervening modes to Q_v1 in descending-k order reproduces
  // Q_v2 bit for bit.
  for (int v1 = 0; v1 < K; ++v1) {
    for (int v2 = v1 + 1; v2 <= K; ++v2) {
      std::vector<double> acc = trend_feature(d, v1).values.values;
      for (int k = K - v1 - 1; k >= K - v2; --k) {
        for (std::size_t t = 0; t < acc.size(); ++t) {
          acc[t] += d.imfs[static_cast<std::size_t>(k)].values[t];
        }
      }
      CHECK(acc == trend_feature(d, v2).values.values);
    }
  }
}

TEST_CASE("trend_feature rejects out-of-range levels") {
  const Series s = testutil::mixed_signal(200, 70);
  const emd::Decomposition d = emd::emd(s, {});
  CHECK_THROWS_AS(trend_feature(d, -1), LevelOutOfRange);
  CHECK_THROWS_AS(trend_feature(d, static_cast<int>(d.imfs.size()) + 1),
                  LevelOutOfRange);
}

TEST_CASE("Q_0 smooths the input: total variation does not grow") {
  const Series s = testutil::mixed_signal(300, 81);
  EnsembleConfig cfg;
  cfg.realizations = 12;
  cfg.base_seed = 3;
  const emd::Decomposition d = ceemd(s, cfg);
  const TrendFeature q0 = trend_feature(d, 0);
  CHECK(total_variation(q0.values.values) <= total_variation(s.values));
}

TEST_CASE("eemd_trend_feature levels and determinism") {
  const Series s = testutil::mixed_signal(220, 90);
  EnsembleConfig cfg;
  cfg.realizations = 6;
  cfg.base_seed = 17;

  const emd::Decomposition d = eemd(s, cfg);
  const TrendFeature e0 = eemd_trend_feature(s, 0, cfg);
  CHECK(e0.values.values == d.residue.values);
  CHECK(e0.source == TrendSource::EEMD);

  const TrendFeature again = eemd_trend_feature(s, 0, cfg);
  CHECK(e0.values.values == again.values.values);

  EnsembleConfig noiseless = cfg;
  noiseless.noise_std = 0.0;
  const TrendFeature e1 = eemd_trend_feature(s, 1, noiseless);
  const TrendFeature q1 = trend_feature(
      emd::emd(s, {}, noiseless.max_total_sift_iterations), 1);
  CHECK(e1.values.values == q1.values.values);
}

TEST_CASE("stage seeds are distinct across stages and realizations") {
  const auto s11 = stage_seed(42, 1, 1);
  CHECK(s11 != stage_seed(42, 1, 2));
  CHECK(s11 != stage_seed(42, 2, 1));
  CHECK(s11 == stage_seed(42, 1, 1));
  CHECK(stage_seed(1, 3, 4) != stage_seed(2, 3, 4));
}
