#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "trendrul/cmapss.hpp"
#include "trendrul/timeseries.hpp"

using namespace trendrul;

namespace {

cmapss::EngineUnit unit_with_sensor(std::vector<double> values, int columns = 3,
                                    int column = 0) {
  cmapss::EngineUnit u;
  u.unit_id = 1;
  const auto n = static_cast<Eigen::Index>(values.size());
  u.sensors = Eigen::MatrixXd::Zero(n, columns);
  for (Eigen::Index t = 0; t < n; ++t) {
    u.sensors(t, column) = values[static_cast<std::size_t>(t)];
  }
  u.op_settings = Eigen::MatrixXd::Zero(n, 3);
  return u;
}

}  // namespace

TEST_CASE("fit_normalization finds the global min and max") {
  const auto u = unit_with_sensor({641.21, 643.0, 644.53, 642.4});
  const auto stats = fit_normalization({u}, 1);
  CHECK(stats.min == doctest::Approx(641.21));
  CHECK(stats.max == doctest::Approx(644.53));
  CHECK(stats.sensor == 1);
}

TEST_CASE("fit_normalization rejects a constant sensor") {
  const auto u = unit_with_sensor({100.0, 100.0, 100.0});
  CHECK_THROWS_AS(fit_normalization({u}, 1), SensorDegenerate);
}

TEST_CASE("fit_normalization unions ranges across units") {
  const auto a = unit_with_sensor({0.0, 1.0});
  const auto b = unit_with_sensor({-2.0, 3.0});
  const auto stats = fit_normalization({a, b}, 1);
  CHECK(stats.min == doctest::Approx(-2.0));
  CHECK(stats.max == doctest::Approx(3.0));
}

TEST_CASE("min_max_normalize maps the training range onto [-1, 1]") {
  const NormalizationStats stats{10.0, 30.0, 4};
  CHECK(min_max_normalize(10.0, stats) == doctest::Approx(-1.0));
  CHECK(min_max_normalize(30.0, stats) == doctest::Approx(1.0));
  CHECK(min_max_normalize(20.0, stats) == doctest::Approx(0.0));
  // Out-of-range test values are not clipped.
  CHECK(min_max_normalize(35.0, stats) > 1.0);
  CHECK_THROWS_AS(min_max_normalize(1.0, NormalizationStats{5.0, 5.0, 1}),
                  SensorDegenerate);
}

TEST_CASE("normalization round trip and monotonicity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> bound(-100.0, 100.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    double lo = bound(rng), hi = bound(rng);
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 1e-6) hi = lo + 1.0;
    const NormalizationStats stats{lo, hi, 1};
    double prev_y = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      const double x = lo + (hi - lo) * (unit(rng) * 1.4 - 0.2);
      const double y = min_max_normalize(x, stats);
      const double back = denormalize(y, stats);
      CHECK(std::abs(back - x) <=
            1e-12 * std::max(1.0, std::abs(x)));
      (void)prev_y;
    }
    // strictly monotone increasing
    const double y1 = min_max_normalize(lo + 0.3 * (hi - lo), stats);
    const double y2 = min_max_normalize(lo + 0.300001 * (hi - lo), stats);
    CHECK(y2 > y1);
  }
}

TEST_CASE("sliding_mean keeps constants constant, including at edges") {
  Series s(std::vector<double>(11, 3.25));
  for (int window : {1, 3, 5, 9}) {
    const Series out = sliding_mean(s, window);
    REQUIRE(out.size() == s.size());
    for (double v : out.values) CHECK(v == doctest::Approx(3.25));
  }
}

TEST_CASE("sliding_mean of a linear ramp returns the center sample inside") {
  const Series s = testutil::ramp(21, 0.0, 20.0);
  const Series out = sliding_mean(s, 5);
  for (std::size_t t = 2; t + 2 < s.size(); ++t) {
    CHECK(out.values[t] == doctest::Approx(s.values[t]));
  }
}

TEST_CASE("sliding_mean window example") {
  const Series s(std::vector<double>{0.0, 0.0, 5.0, 0.0, 0.0});
  const Series out = sliding_mean(s, 5);
  CHECK(out.values[2] == doctest::Approx(1.0));
}

TEST_CASE("sliding_mean matches a brute-force oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 40);
    Series s;
    s.values.resize(static_cast<std::size_t>(n));
    for (double& v : s.values) v = dist(rng);
    const int window = 1 + 2 * static_cast<int>(rng() % 5);
    const Series out = sliding_mean(s, window);
    const int half = (window - 1) / 2;
    for (int t = 0; t < n; ++t) {
      double sum = 0.0;
      int count = 0;
      for (int k = std::max(0, t - half); k <= std::min(n - 1, t + half); ++k) {
        sum += s.values[static_cast<std::size_t>(k)];
        ++count;
      }
      CHECK(out.values[static_cast<std::size_t>(t)] ==
            doctest::Approx(sum / count).epsilon(1e-12));
    }
  }
}

TEST_CASE("sliding_mean with window 1 is the identity") {
  const Series s(std::vector<double>{4.0, -1.0, 2.5, 0.0});
  const Series out = sliding_mean(s, 1);
  CHECK(out.values == s.values);
}

TEST_CASE("sliding_mean rejects even windows") {
  const Series s(std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(sliding_mean(s, 4), InvalidWindow);
  CHECK_THROWS_AS(sliding_mean(s, 0), InvalidWindow);
}
