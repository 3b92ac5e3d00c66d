#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "trendrul/timeseries.hpp"

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline double max_abs(const std::vector<double>& a) {
  double worst = 0.0;
  for (double v : a) worst = std::max(worst, std::abs(v));
  return worst;
}

inline trendrul::Series sine(std::size_t n, double cycles, double amplitude = 1.0,
                             double phase = 0.0) {
  trendrul::Series s;
  s.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    s.values[t] = amplitude * std::sin(2.0 * kPi * cycles *
                                           static_cast<double>(t) /
                                           static_cast<double>(n) +
                                       phase);
  }
  return s;
}

inline trendrul::Series ramp(std::size_t n, double lo = -1.0, double hi = 1.0) {
  trendrul::Series s;
  s.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    s.values[t] =
        lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(n - 1);
  }
  return s;
}

// Mixture of 1-3 tones plus a ramp plus Gaussian noise, the acceptance-suite
// style synthetic signal.
inline trendrul::Series mixed_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> tone_count(1, 3);
  std::uniform_real_distribution<double> cyc(2.0, 40.0);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::normal_distribution<double> noise(0.0, 0.05);

  trendrul::Series s = ramp(n, -0.5, 0.5);
  const int tones = tone_count(rng);
  for (int k = 0; k < tones; ++k) {
    const double c = cyc(rng);
    const double a = amp(rng);
    const double p = phase(rng);
    for (std::size_t t = 0; t < n; ++t) {
      s.values[t] += a * std::sin(2.0 * kPi * c * static_cast<double>(t) /
                                      static_cast<double>(n) +
                                  p);
    }
  }
  for (std::size_t t = 0; t < n; ++t) s.values[t] += noise(rng);
  return s;
}

}  // namespace testutil
