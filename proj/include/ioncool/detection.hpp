#pragma once

// Electron-shelving state detection: photon-count reference distributions for
// bright (down) and dark (up) ions, Monte Carlo histograms, and the
// maximum-likelihood estimate of the bright amplitude a in
//   psi = a * psi_down + (1 - a) * psi_up.

#include <cstdint>
#include <span>
#include <vector>

#include "ioncool/rng.hpp"

namespace ioncool {

struct DetectionModel {
  double mean_bright = 5.8;   // mean counts of a bright ion per exposure, stray light included
  double mean_dark = 0.15;    // mean stray-light counts per exposure
  double exposure = 12.5e-6;  // s
  double depump_rate = 0.0;   // 1/s, dark -> bright conversion during exposure
  int k_max = 30;

  void validate() const;
  // Same rates, different exposure: both means scale linearly.
  [[nodiscard]] DetectionModel with_exposure(double new_exposure) const;
  // 5.8 / 0.15 counts at 12.5 us with the depump rate that puts the dark-ion
  // mean at 0.2 counts.
  static DetectionModel defaults();
};

// Depump rate r for which the dark-ion mean count equals target_dark_mean:
//   mean_dark + (mean_bright - mean_dark) * (1 - (1 - exp(-rT)) / (rT)) = target.
[[nodiscard]] double depump_rate_for_dark_mean(const DetectionModel& model,
                                               double target_dark_mean);

struct ReferenceDistributions {
  std::vector<double> psi_down;  // bright ion
  std::vector<double> psi_up;    // dark ion
};

// psi_down = Poisson(mean_bright); psi_up = Poisson(mean_dark) when
// depump_rate == 0, else the mixture over an exponential dark->bright switch
// time. Both truncated at k_max and renormalized; throws TruncationError when
// the discarded tail exceeds 1e-6.
[[nodiscard]] ReferenceDistributions reference_distributions(const DetectionModel& model);

[[nodiscard]] double distribution_mean(std::span<const double> psi);

// sum_k psi_down[k] * psi_up[k]
[[nodiscard]] double overlap(std::span<const double> psi_down, std::span<const double> psi_up);

struct Histogram {
  std::vector<std::uint64_t> counts;  // index k = detected photons
  std::uint64_t shots = 0;

  void validate() const;
  [[nodiscard]] double mean() const;
};

// Each shot is bright with probability a and then draws a count from the
// corresponding reference distribution.
[[nodiscard]] Histogram simulate_detection(double a, const ReferenceDistributions& refs,
                                           std::uint64_t shots, Rng& rng);
[[nodiscard]] Histogram simulate_detection(double a, const DetectionModel& model,
                                           std::uint64_t shots, std::uint64_t seed);

struct PopulationFit {
  double a = 0.0;
  double sigma = 0.0;  // 1/sqrt(observed Fisher information)
  bool at_boundary = false;  // a clamped to 0 or 1: sigma is one-sided
};

// Maximum-likelihood a in [0,1]. Throws FitError when the references are
// indistinguishable or the histogram has zero likelihood everywhere.
[[nodiscard]] PopulationFit fit_population(std::span<const double> counts,
                                           std::span<const double> psi_down,
                                           std::span<const double> psi_up);
[[nodiscard]] PopulationFit fit_population(const Histogram& hist,
                                           std::span<const double> psi_down,
                                           std::span<const double> psi_up);

}  // namespace ioncool
