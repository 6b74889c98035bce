#pragma once

// Laser modulation-chain bookkeeping: EOM phase-modulation sidebands,
// the effect of frequency doubling on them, and AOM frequency chains.

#include <optional>
#include <string>
#include <vector>

namespace ioncool {

// J_0(x) .. J_max_order(x) for x >= 0.
[[nodiscard]] std::vector<double> bessel_j_orders(int max_order, double x);
// J_k(x) for any integer k (J_-k = (-1)^k J_k) and x >= 0.
[[nodiscard]] double bessel_j(int k, double x);

struct SidebandSpectrum {
  int max_order = 0;
  std::vector<double> power;  // index k + max_order, k in [-max_order, max_order]
  double remainder = 0.0;     // power outside the table, 1 - sum(power)

  [[nodiscard]] double at(int k) const;
  [[nodiscard]] double carrier_to_first_ratio() const;
};

// Power fractions J_k(beta)^2 of a phase-modulated field.
[[nodiscard]] SidebandSpectrum sideband_powers(double beta, int max_order);

struct ModulationState {
  double carrier_frequency = 0.0;  // Hz
  double beta = 0.0;
  double mod_frequency = 0.0;  // Hz

  void validate() const;
  friend bool operator==(const ModulationState&, const ModulationState&) = default;
};

// Frequency doubling: carrier and modulation index double, the
// carrier-sideband spacing stays.
[[nodiscard]] ModulationState shg_transform(const ModulationState& state);

// Inverse of J_0(beta)^2 / J_1(beta)^2 on beta in (0, first zero of J_0).
// Needs ratio > 1; PreconditionError otherwise or when beta would fall below 1e-8.
[[nodiscard]] double beta_from_ratio(double carrier_to_single_sideband_ratio);

struct AomStage {
  std::optional<double> frequency;  // Hz; empty = the unknown drive frequency
  int passes = 1;
  int sign = +1;
  std::string label;
};

struct AomChain {
  std::vector<AomStage> stages;

  void validate() const;
};

// sum sign * passes * frequency; every frequency must be known.
[[nodiscard]] double net_shift(const AomChain& chain);

// Frequency of the unknown stages (all unknown stages share one drive
// frequency) that makes net_shift equal target.
[[nodiscard]] double solve_chain(const AomChain& chain, double target);

// Chain for the frequency difference a - b of two beams.
[[nodiscard]] AomChain difference_chain(const AomChain& a, const AomChain& b);

// Two Raman branches, each through its own single-pass AOM (shifting in
// opposite directions), then counter-propagating through one shared
// double-pass AOM pair whose drive frequency is left unknown.
[[nodiscard]] AomChain raman_difference_chain(double single_pass_frequency);

}  // namespace ioncool
