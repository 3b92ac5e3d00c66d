#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "trendrul/emd.hpp"

using namespace trendrul;
using namespace trendrul::emd;
using testutil::kPi;

TEST_CASE("find_extrema on two full sine periods") {
  Series s;
  s.values.resize(100);
  for (int t = 0; t < 100; ++t) {
    s.values[static_cast<std::size_t>(t)] = std::sin(2.0 * kPi * t / 50.0);
  }
  const ExtremaSet ext = find_extrema(s);
  CHECK(ext.maxima.size() == 2);
  CHECK(ext.minima.size() == 2);
}

TEST_CASE("find_extrema on a monotone ramp is empty") {
  const ExtremaSet ext = find_extrema(testutil::ramp(50));
  CHECK(ext.maxima.empty());
  CHECK(ext.minima.empty());
}

TEST_CASE("find_extrema resolves plateaus to the floor midpoint") {
  const ExtremaSet ext = find_extrema(Series({0.0, 1.0, 1.0, 0.0}));
  REQUIRE(ext.maxima.size() == 1);
  CHECK(ext.maxima[0] == 1);
  CHECK(ext.minima.empty());

  // three-wide plateau, midpoint index 2
  const ExtremaSet wide = find_extrema(Series({0.0, 2.0, 2.0, 2.0, 0.0}));
  REQUIRE(wide.maxima.size() == 1);
  CHECK(wide.maxima[0] == 2);

  // symmetric rule for minima
  const ExtremaSet low = find_extrema(Series({1.0, 0.0, 0.0, 1.0}));
  REQUIRE(low.minima.size() == 1);
  CHECK(low.minima[0] == 1);
}

TEST_CASE("endpoints are never extrema") {
  const ExtremaSet ext = find_extrema(Series({5.0, 1.0, 4.0}));
  CHECK(ext.maxima.empty());
  REQUIRE(ext.minima.size() == 1);
  CHECK(ext.minima[0] == 1);
}

TEST_CASE("zero crossings count sign changes, exact zeros once") {
  CHECK(count_zero_crossings(Series({1.0, -1.0, 1.0})) == 2);
  CHECK(count_zero_crossings(Series({1.0, 0.0, -1.0})) == 1);
  CHECK(count_zero_crossings(Series({1.0, 0.0, 1.0})) == 0);
  CHECK(count_zero_crossings(Series({0.0, 0.0, 0.0})) == 0);
  CHECK(count_zero_crossings(Series({-2.0, 3.0, 4.0, -1.0})) == 2);
}

TEST_CASE("spline_envelope through equal knot values is constant") {
  Series s;
  s.values.assign(30, 0.0);
  for (int k : {4, 12, 20, 26}) s.values[static_cast<std::size_t>(k)] = 2.5;
  const Series env = spline_envelope(s, {4, 12, 20, 26}, EnvelopeSide::Upper);
  for (double v : env.values) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("spline_envelope tracks a sinusoid amplitude") {
  const double amplitude = 1.7;
  const Series s = testutil::sine(400, 8.0, amplitude);
  const ExtremaSet ext = find_extrema(s);
  REQUIRE(ext.maxima.size() >= 4);
  const Series env = spline_envelope(s, ext.maxima, EnvelopeSide::Upper);
  // interior indices, away from the boundary mirror region
  for (std::size_t t = 50; t < 350; ++t) {
    CHECK(std::abs(env.values[t] - amplitude) <= 0.05 * amplitude);
  }
}

TEST_CASE("spline_envelope needs at least two knots") {
  const Series s = testutil::sine(64, 1.0);
  CHECK_THROWS_AS(spline_envelope(s, {32}, EnvelopeSide::Upper),
                  EnvelopeUnderdetermined);
  CHECK_THROWS_AS(spline_envelope(s, {}, EnvelopeSide::Lower),
                  EnvelopeUnderdetermined);
  CHECK_THROWS_AS(spline_envelope(s, {5, 5}, EnvelopeSide::Upper),
                  EnvelopeUnderdetermined);
  CHECK_THROWS_AS(spline_envelope(s, {5, 100}, EnvelopeSide::Upper),
                  EnvelopeUnderdetermined);
}

TEST_CASE("extract_imf reproduces a pure sinusoid") {
  const double amplitude = 0.8;
  const Series s = testutil::sine(512, 6.0, amplitude, 0.4);
  const SiftResult r = extract_imf(s, SiftConfig{});
  CHECK(testutil::pearson(r.imf.values, s.values) >= 0.99);
  CHECK(testutil::max_abs(r.residue.values) <= 0.05 * amplitude);
}

TEST_CASE("extract_imf rejects monotone input") {
  CHECK_THROWS_AS(extract_imf(testutil::ramp(64), SiftConfig{}),
                  NotDecomposable);
}

TEST_CASE("extract_imf separates the fast tone of a two-tone signal") {
  const std::size_t n = 512;
  const Series fast = testutil::sine(n, 8.0);
  const Series slow = testutil::sine(n, 1.0, 0.8);
  Series s;
  s.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    s.values[t] = fast.values[t] + slow.values[t];
  }
  const SiftResult r = extract_imf(s, SiftConfig{});
  CHECK(testutil::pearson(r.imf.values, fast.values) >= 0.95);
}

TEST_CASE("emd_first_mode equals emd's first mode") {
  const Series s = testutil::mixed_signal(300, 99);
  const SiftConfig cfg;
  const SiftResult first = emd_first_mode(s, cfg);
  const Decomposition d = emd::emd(s, cfg);
  REQUIRE(!d.imfs.empty());
  CHECK(first.imf.values == d.imfs[0].values);
  for (std::size_t t = 0; t < s.size(); ++t) {
    CHECK(first.residue.values[t] ==
          doctest::Approx(s.values[t] - first.imf.values[t]));
  }
  CHECK_THROWS_AS(emd_first_mode(testutil::ramp(64), cfg), NotDecomposable);
}

TEST_CASE("emd of a monotone ramp terminates immediately") {
  const Series s = testutil::ramp(50);
  const Decomposition d = emd::emd(s, SiftConfig{});
  CHECK(d.imfs.empty());
  CHECK(d.residue.values == s.values);
}

TEST_CASE("emd reconstruction identity on random mixtures") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const Series s = testutil::mixed_signal(300, seed);
    const Decomposition d = emd::emd(s, SiftConfig{});
    std::vector<double> rebuilt = d.residue.values;
    for (const auto& imf : d.imfs) {
      for (std::size_t t = 0; t < rebuilt.size(); ++t) {
        rebuilt[t] += imf.values[t];
      }
    }
    CHECK(testutil::max_abs_diff(rebuilt, s.values) <= 1e-9);
  }
}

TEST_CASE("emd extracts at least two modes from a two-tone signal") {
  const std::size_t n = 512;
  Series s;
  s.values.resize(n);
  const Series fast = testutil::sine(n, 8.0);
  const Series slow = testutil::sine(n, 1.0, 0.8);
  for (std::size_t t = 0; t < n; ++t) {
    s.values[t] = fast.values[t] + slow.values[t];
  }
  const Decomposition d = emd::emd(s, SiftConfig{});
  CHECK(d.imfs.size() >= 2);

  // The slow tone is captured by a later mode.
  double best = -1.0;
  for (std::size_t k = 1; k < d.imfs.size(); ++k) {
    best = std::max(best, testutil::pearson(d.imfs[k].values, slow.values));
  }
  CHECK(best >= 0.90);
}

TEST_CASE("every extracted IMF satisfies the extrema/zero-crossing property") {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const Series s = testutil::mixed_signal(300, seed);
    const Decomposition d = emd::emd(s, SiftConfig{});
    for (const auto& imf : d.imfs) {
      CHECK(satisfies_imf_property(imf));
    }
  }
}

TEST_CASE("the mean envelope of a final IMF is small") {
  const Series s = testutil::mixed_signal(400, 21);
  const Decomposition d = emd::emd(s, SiftConfig{});
  REQUIRE(!d.imfs.empty());
  const Series& imf = d.imfs[0];
  const ExtremaSet ext = find_extrema(imf);
  REQUIRE(ext.maxima.size() >= 2);
  REQUIRE(ext.minima.size() >= 2);
  const Series upper = spline_envelope(imf, ext.maxima, EnvelopeSide::Upper);
  const Series lower = spline_envelope(imf, ext.minima, EnvelopeSide::Lower);
  double worst = 0.0;
  for (std::size_t t = 0; t < imf.size(); ++t) {
    worst = std::max(worst, std::abs(0.5 * (upper.values[t] + lower.values[t])));
  }
  CHECK(worst <= 0.1 * testutil::max_abs(imf.values));
}

TEST_CASE("emd is deterministic") {
  const Series s = testutil::mixed_signal(256, 77);
  const Decomposition a = emd::emd(s, SiftConfig{});
  const Decomposition b = emd::emd(s, SiftConfig{});
  REQUIRE(a.imfs.size() == b.imfs.size());
  for (std::size_t k = 0; k < a.imfs.size(); ++k) {
    CHECK(a.imfs[k].values == b.imfs[k].values);
  }
  CHECK(a.residue.values == b.residue.values);
}

TEST_CASE("emd rejects a too-short series") {
  CHECK_THROWS_AS(emd::emd(Series({1.0, 2.0}), SiftConfig{}), ShapeError);
}
