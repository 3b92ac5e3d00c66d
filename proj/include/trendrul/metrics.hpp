#pragma once

#include <map>
#include <vector>

#include "trendrul/timeseries.hpp"

namespace trendrul::metrics {

// Denominators of the asymmetric exponential score. Defaults follow the
// printed PHM-challenge formula in the source material; the canonical
// PHM08 late constant (10) is available through configuration.
struct ScoreConfig {
  double a_early = 13.0;  // d < 0
  double a_late = 15.0;   // d >= 0
};

// Per-cycle Gaussian model of one sensor's measurement for a set of units.
struct DistributionTrack {
  // unit_id -> per-cycle mean / standard deviation (sigma > 0 everywhere).
  std::map<int, std::vector<double>> mean;
  std::map<int, std::vector<double>> stddev;
};

// s = sum_p s_p with s_p = exp(-d_p/a_early)-1 for d_p < 0 and
// exp(d_p/a_late)-1 otherwise, d_p = predicted - true.
double phm_score(const std::vector<double>& predicted,
                 const std::vector<double>& truth,
                 const ScoreConfig& cfg = {});

double rmse(const std::vector<double>& predicted,
            const std::vector<double>& truth);

// Mean probability density: average over units, then cycles, of the
// Gaussian density of the feature under the track.
double mpd(const std::map<int, Series>& features,
           const DistributionTrack& track);

// Average over units, then cycles, of |x - mu| (the absolute-error form,
// matching the printed formula).
double mare(const std::map<int, Series>& features,
            const DistributionTrack& track);

// Empirical Gaussian baseline standing in for the out-of-scope learned
// estimator: cycles map to lifetime fractions, values pool per fraction
// bin across units, and each (unit, cycle) receives its bin's mean and
// standard deviation. Bins with fewer than 2 samples borrow the nearest
// populated bin; sigma is floored at 1e-3.
DistributionTrack baseline_distribution(const std::map<int, Series>& training,
                                        int bins = 50);

inline constexpr double kSigmaFloor = 1e-3;

}  // namespace trendrul::metrics
