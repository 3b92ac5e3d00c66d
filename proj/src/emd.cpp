#include "trendrul/emd.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "trendrul/errors.hpp"

namespace trendrul::emd {

namespace {

// Natural cubic spline through strictly increasing abscissae. Outside the
// knot range it extrapolates linearly with the end slope (the natural end
// condition makes the boundary curvature zero).
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n >= 3) {
      // Thomas solve for the interior second derivatives.
      std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
      for (std::size_t j = 1; j + 1 < n; ++j) {
        const double h0 = x_[j] - x_[j - 1];
        const double h1 = x_[j + 1] - x_[j];
        diag[j] = 2.0 * (h0 + h1);
        upper[j] = h1;
        rhs[j] = 6.0 * ((y_[j + 1] - y_[j]) / h1 - (y_[j] - y_[j - 1]) / h0);
      }
      for (std::size_t j = 2; j + 1 < n; ++j) {
        const double h0 = x_[j] - x_[j - 1];
        const double w = h0 / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
      }
      for (std::size_t j = n - 2; j >= 1; --j) {
        m_[j] = (rhs[j] - upper[j] * m_[j + 1]) / diag[j];
        if (j == 1) break;
      }
    }
  }

  double operator()(double t) const {
    const std::size_t n = x_.size();
    if (t <= x_.front()) {
      return y_.front() + end_slope(true) * (t - x_.front());
    }
    if (t >= x_.back()) {
      return y_.back() + end_slope(false) * (t - x_.back());
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[j + 1] - x_[j];
    const double a = (x_[j + 1] - t) / h;
    const double b = (t - x_[j]) / h;
    return a * y_[j] + b * y_[j + 1] +
           ((a * a * a - a) * m_[j] + (b * b * b - b) * m_[j + 1]) * h * h /
               6.0;
  }

 private:
  double end_slope(bool left) const {
    const std::size_t n = x_.size();
    if (left) {
      const double h = x_[1] - x_[0];
      return (y_[1] - y_[0]) / h - h * (2.0 * m_[0] + m_[1]) / 6.0;
    }
    const double h = x_[n - 1] - x_[n - 2];
    return (y_[n - 1] - y_[n - 2]) / h + h * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0;
  }

  std::vector<double> x_, y_, m_;
};

// Mirrors up to mirror_count knots across each end so the spline
// interpolates over [0, n-1], then evaluates it at every sample index.
// Returns nothing when even the mirrored knot set is too small to fit.
std::optional<Series> envelope_through(const Series& series,
                                       const std::vector<int>& knots,
                                       int mirror_count) {
  const int n = static_cast<int>(series.size());
  const int m = static_cast<int>(knots.size());
  std::vector<double> xs, ys;
  xs.reserve(knots.size() + 2 * static_cast<std::size_t>(mirror_count));
  ys.reserve(xs.capacity());
  // Reflected indices arrive in ascending order because j runs downward.
  for (int j = std::min(mirror_count, m) - 1; j >= 0; --j) {
    const int mirrored = -knots[static_cast<std::size_t>(j)];
    if (mirrored >= 0) continue;  // a knot at index 0 cannot mirror left
    xs.push_back(mirrored);
    ys.push_back(series.values[static_cast<std::size_t>(knots[j])]);
  }
  for (int k : knots) {
    xs.push_back(k);
    ys.push_back(series.values[static_cast<std::size_t>(k)]);
  }
  for (int j = 0; j < std::min(mirror_count, m); ++j) {
    const int src = knots[static_cast<std::size_t>(m - 1 - j)];
    const int mirrored = 2 * (n - 1) - src;
    if (mirrored <= n - 1) continue;
    xs.push_back(mirrored);
    ys.push_back(series.values[static_cast<std::size_t>(src)]);
  }
  if (xs.size() < 2) return std::nullopt;

  NaturalSpline spline(std::move(xs), std::move(ys));
  Series env;
  env.start_cycle = series.start_cycle;
  env.values.resize(series.size());
  for (int t = 0; t < n; ++t) {
    env.values[static_cast<std::size_t>(t)] = spline(t);
  }
  return env;
}

double sum_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst;
}

}  // namespace

ExtremaSet find_extrema(const Series& series) {
  ExtremaSet out;
  const auto& v = series.values;
  const int n = static_cast<int>(v.size());
  if (n < 3) return out;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v[static_cast<std::size_t>(j + 1)] ==
                            v[static_cast<std::size_t>(i)]) {
      ++j;  // plateau [i, j]
    }
    if (i > 0 && j < n - 1) {
      const int mid = (i + j) / 2;
      const double here = v[static_cast<std::size_t>(i)];
      const double before = v[static_cast<std::size_t>(i - 1)];
      const double after = v[static_cast<std::size_t>(j + 1)];
      if (here > before && here > after) {
        out.maxima.push_back(mid);
      } else if (here < before && here < after) {
        out.minima.push_back(mid);
      }
    }
    i = j + 1;
  }
  return out;
}

int count_zero_crossings(const Series& series) {
  int crossings = 0;
  int last_sign = 0;
  for (double x : series.values) {
    const int sign = (x > 0.0) - (x < 0.0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++crossings;
    last_sign = sign;
  }
  return crossings;
}

bool is_decomposable(const Series& series) {
  return find_extrema(series).total() >= 2;
}

bool satisfies_imf_property(const Series& series) {
  const auto ext = find_extrema(series);
  const int zc = count_zero_crossings(series);
  return std::abs(static_cast<int>(ext.total()) - zc) <= 1;
}

Series spline_envelope(const Series& series, const std::vector<int>& knots,
                       EnvelopeSide /*side*/, int mirror_count) {
  const int n = static_cast<int>(series.size());
  if (knots.size() < 2) {
    throw EnvelopeUnderdetermined(
        "spline envelope needs at least 2 knots, got " +
        std::to_string(knots.size()));
  }
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (knots[j] < 0 || knots[j] >= n) {
      throw EnvelopeUnderdetermined("knot index out of range: " +
                                    std::to_string(knots[j]));
    }
    if (j > 0 && knots[j] <= knots[j - 1]) {
      throw EnvelopeUnderdetermined(
          "knot indices must be strictly increasing");
    }
  }
  return *envelope_through(series, knots, mirror_count);
}

SiftResult extract_imf_budgeted(const Series& series, const SiftConfig& cfg,
                                int budget) {
  if (!is_decomposable(series)) {
    throw NotDecomposable(
        "series has fewer than two interior extrema and can not be "
        "decomposed any more");
  }
  const int cap = std::min(cfg.max_sift_iterations, std::max(1, budget));
  Series h = series;
  int iterations = 0;
  while (iterations < cap) {
    const auto ext = find_extrema(h);
    if (ext.maxima.empty() || ext.minima.empty()) break;
    const auto upper =
        envelope_through(h, ext.maxima, cfg.boundary_mirror_count);
    const auto lower =
        envelope_through(h, ext.minima, cfg.boundary_mirror_count);
    if (!upper || !lower) break;
    const double denom = sum_squares(h.values);
    double delta_sq = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double mean = 0.5 * (upper->values[t] + lower->values[t]);
      h.values[t] -= mean;
      delta_sq += mean * mean;
    }
    ++iterations;
    const double sd = denom > 0.0 ? delta_sq / denom : 0.0;
    if (sd < cfg.sd_threshold && satisfies_imf_property(h)) break;
  }

  SiftResult out;
  out.imf = h;
  out.residue.start_cycle = series.start_cycle;
  out.residue.values.resize(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    out.residue.values[t] = series.values[t] - h.values[t];
  }
  out.iterations_used = iterations;
  return out;
}

SiftResult extract_imf(const Series& series, const SiftConfig& cfg) {
  return extract_imf_budgeted(series, cfg, cfg.max_sift_iterations);
}

SiftResult emd_first_mode(const Series& series, const SiftConfig& cfg) {
  return extract_imf(series, cfg);
}

Decomposition emd(const Series& series, const SiftConfig& cfg,
                  int max_total_sift_iterations) {
  if (series.size() < 3) {
    throw ShapeError("emd requires a series of length >= 3");
  }
  Decomposition d;
  d.source_length = static_cast<int>(series.size());
  Series residue = series;
  int budget = max_total_sift_iterations;
  // A residue at rounding level is fully decomposed even if float dust
  // still carries extrema.
  const double negligible = 1e-12 * max_abs(series.values);
  while (budget >= 1 && is_decomposable(residue) &&
         max_abs(residue.values) > negligible) {
    SiftResult step = extract_imf_budgeted(residue, cfg, budget);
    budget -= step.iterations_used;
    if (step.iterations_used == 0) break;
    d.imfs.push_back(std::move(step.imf));
    residue = std::move(step.residue);
  }
  d.residue = std::move(residue);
  return d;
}

}  // namespace trendrul::emd
