#pragma once

#include <utility>
#include <vector>

#include "trendrul/timeseries.hpp"

namespace trendrul::emd {

// Interior extrema of a series. Indices are strictly increasing, maxima and
// minima interleave, endpoints are never extrema. A plateau of equal values
// flanked by lower (higher) values yields one maximum (minimum) at the floor
// of its midpoint index.
struct ExtremaSet {
  std::vector<int> maxima;
  std::vector<int> minima;

  std::size_t total() const noexcept { return maxima.size() + minima.size(); }
};

struct SiftConfig {
  double sd_threshold = 0.2;
  int max_sift_iterations = 5000;
  int boundary_mirror_count = 2;
};

// Ordered fast-to-slow modes plus the undecomposable remainder.
// Invariant: sum of imfs plus residue reproduces the source to <= 1e-9.
struct Decomposition {
  std::vector<Series> imfs;
  Series residue;
  int source_length = 0;
};

enum class EnvelopeSide { Upper, Lower };

ExtremaSet find_extrema(const Series& series);

// Sign changes between consecutive samples; exact zeros count once.
int count_zero_crossings(const Series& series);

// A series is decomposable when it has at least two interior extrema
// (the CEEMD termination rule: the residue "does not have at least two
// extremes").
bool is_decomposable(const Series& series);

// |#extrema - #zero-crossings| <= 1.
bool satisfies_imf_property(const Series& series);

// Natural cubic spline through (index, value) at the given knots, evaluated
// at every sample index. Before fitting, up to mirror_count knots are
// mirrored past each end of the series to suppress end swings. Throws
// EnvelopeUnderdetermined for fewer than 2 knots.
Series spline_envelope(const Series& series, const std::vector<int>& knots,
                       EnvelopeSide side, int mirror_count = 2);

struct SiftResult {
  Series imf;
  Series residue;
  int iterations_used = 0;
};

// One sifting pass: h <- h - mean(upper_env, lower_env) until the Cauchy
// criterion SD = sum((h_prev - h)^2) / sum(h_prev^2) < sd_threshold and the
// IMF property holds, or the iteration cap is reached. Throws
// NotDecomposable when the input has fewer than two interior extrema.
SiftResult extract_imf(const Series& series, const SiftConfig& cfg);

// As extract_imf but drawing iterations from a shared budget.
SiftResult extract_imf_budgeted(const Series& series, const SiftConfig& cfg,
                                int budget);

// Repeatedly applies extract_imf to successive residues until the remainder
// is undecomposable or the total sifting budget is exhausted. Monotone input
// yields zero IMFs and residue = input.
Decomposition emd(const Series& series, const SiftConfig& cfg = {},
                  int max_total_sift_iterations = 5000);

// The single-mode operator EMD1 used inside CEEMD (identical to
// extract_imf; kept as a named entry point for the ensemble recursion).
SiftResult emd_first_mode(const Series& series, const SiftConfig& cfg);

}  // namespace trendrul::emd
