#pragma once

// Thermometry and curve fitting for simulated or measured scans: sideband
// ratio thermometry, Gaussian resonance fits, Rabi sinusoids (plain and
// exponentially decaying) and the thermal carrier-flop model.
//
// Every fitter works in rescaled x coordinates internally and reports
// parameters and covariances in the units of the input scan.

#include <optional>
#include <string>
#include <vector>

namespace ioncool {

struct ScanData {
  std::vector<double> x;        // s or rad/s
  std::vector<double> y;        // excitation probability
  std::vector<double> sigma_y;  // per-point standard error, > 0

  void validate() const;
  [[nodiscard]] std::size_t size() const { return x.size(); }
};

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

struct FitReport {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> sigmas;
  std::vector<double> covariance;  // row-major, input units
  double chi2 = 0.0;
  int dof = 0;
  double residual_norm = 0.0;  // sqrt(chi2)
  int iterations = 0;
  bool converged = false;
  bool low_confidence = false;
  std::string message;
};

struct SidebandThermometry {
  double q = 0.0;
  double sigma_q = 0.0;
  double nbar = 0.0;
  double sigma_nbar = 0.0;
  double p0 = 1.0;  // ground-state population 1 - Q
  double sigma_p0 = 0.0;
};

// nbar = Q/(1-Q) with Q = rho_R/rho_B, first-order error propagation.
// Throws PreconditionError for amplitudes outside [0,1] and FitError when
// rho_R >= rho_B (Q >= 1).
[[nodiscard]] SidebandThermometry nbar_from_sidebands(double rho_red, double rho_blue,
                                                      double sigma_red, double sigma_blue);

// Excitation that off-resonant leakage alone adds during a probe of the given
// length, first order, subtracted from a fitted amplitude.
[[nodiscard]] double leakage_corrected_amplitude(double amplitude, double leak_up_rate,
                                                 double probe_duration);

struct GaussianFitOptions {
  std::optional<double> fixed_center;
  std::optional<double> fixed_width;
};

// y = baseline + amplitude * exp(-(x - center)^2 / (2 width^2))
struct GaussianFit {
  Estimate center;
  Estimate amplitude;
  Estimate width;
  Estimate baseline;
  FitReport report;
};

[[nodiscard]] GaussianFit fit_gaussian_resonance(const ScanData& scan,
                                                 const GaussianFitOptions& options = {});

// Spectral estimate of the dominant angular frequency: periodogram peak,
// falling back to the zero-crossing rate of y - mean(y). nullopt when both fail.
[[nodiscard]] std::optional<double> estimate_angular_frequency(const std::vector<double>& x,
                                                               const std::vector<double>& y);

// y = baseline + contrast/2 * (1 - cos(omega x + phase))
struct SinusoidFit {
  Estimate omega;
  Estimate contrast;
  Estimate phase;
  Estimate baseline;
  bool frequency_fallback = false;  // spectral estimate failed; see report.message
  FitReport report;
};

[[nodiscard]] SinusoidFit fit_rabi_sinusoid(const ScanData& scan);

// y = baseline + contrast/2 * (1 - exp(-gamma x) cos(omega x + phase))
struct DecayingSinusoidFit {
  Estimate omega;
  Estimate gamma_decay;
  Estimate contrast;
  Estimate phase;
  Estimate baseline;
  FitReport report;  // low_confidence when overdamped or omega poorly determined
};

[[nodiscard]] DecayingSinusoidFit fit_decaying_sinusoid(const ScanData& scan);

// Carrier flop of a thermal state: y(t) = sum_n P_th(n; nbar) sin^2(Omega_{n,n} t / 2).
struct ThermalFlopFit {
  Estimate nbar;
  Estimate omega0;
  bool flat_likelihood = false;  // data cannot pin the parameters (collapsed regime only)
  FitReport report;
};

[[nodiscard]] ThermalFlopFit fit_thermal_flop(const ScanData& scan, double eta);

// Noise-free model used by fit_thermal_flop, exposed for simulation and tests.
[[nodiscard]] double thermal_carrier_excitation(double nbar, double omega0, double eta,
                                                double duration);

struct SidebandPairAnalysis {
  GaussianFit blue;
  GaussianFit red;
  SidebandThermometry thermometry;
};

// Fits the blue-sideband resonance freely, then the red one with center and
// width held at the blue values, and applies nbar_from_sidebands to the two
// amplitudes (a negative red amplitude counts as 0).
[[nodiscard]] SidebandPairAnalysis analyze_sideband_pair(const ScanData& red,
                                                         const ScanData& blue);

}  // namespace ioncool
