#pragma once

// Fock-space mathematics for one harmonic mode: thermal occupations, the
// Doppler limit, the Lamb-Dicke parameter and motional-state-dependent Rabi
// frequencies of carrier and sideband transitions.

#include <optional>
#include <span>
#include <vector>

namespace ioncool {

inline constexpr int kDefaultNMax = 256;
inline constexpr double kDefaultTruncationTolerance = 1e-6;

struct AtomConfig {
  double mass_amu = 0.0;
  double transition_wavelength = 0.0;  // m
  double linewidth_gamma = 0.0;        // rad/s
  double hyperfine_splitting = 0.0;    // Hz

  void validate() const;
  static AtomConfig mg25();
};

struct TrapConfig {
  double omega_ax = 0.0;   // rad/s
  double omega_rad = 0.0;  // rad/s
  // Projection of the effective Raman wavevector onto the axial mode, in
  // units of one optical wavenumber (sqrt(2) for beams crossing at 90 deg,
  // each 45 deg to the axis).
  double raman_geometry_factor = 0.0;
  std::optional<double> eta_override;

  void validate() const;
};

// Probability vector over Fock states n = 0..n_max.
class MotionalDistribution {
 public:
  // Validates entries in [0,1], unit sum within 1e-9 and P(n_max) below
  // tail_tolerance.
  explicit MotionalDistribution(std::vector<double> populations,
                                double tail_tolerance = kDefaultTruncationTolerance);

  [[nodiscard]] int n_max() const { return static_cast<int>(populations_.size()) - 1; }
  [[nodiscard]] std::span<const double> populations() const { return populations_; }
  [[nodiscard]] double operator[](int n) const { return populations_[static_cast<std::size_t>(n)]; }
  [[nodiscard]] double mean() const;

 private:
  std::vector<double> populations_;
};

// Geometric distribution P(n) = nbar^n / (nbar+1)^(n+1), truncated at n_max
// and renormalized. Throws TruncationError when the discarded mass above
// n_max exceeds tolerance.
[[nodiscard]] MotionalDistribution thermal_distribution(
    double nbar, int n_max, double tolerance = kDefaultTruncationTolerance);

// Raw (unvalidated) thermal weights for n = 0..n_max, renormalized over the
// window. Used by fitters that must evaluate arbitrary trial nbar values.
[[nodiscard]] std::vector<double> thermal_weights(double nbar, int n_max);

struct DopplerLimit {
  double temperature = 0.0;  // K
  double nbar = 0.0;
};

// T = hbar*gamma / (2 k_B), nbar = 1 / (exp(hbar*omega / k_B T) - 1).
[[nodiscard]] DopplerLimit doppler_limit_nbar(const AtomConfig& atom, double omega);

// eta = (geometry_factor * 2 pi / lambda) * sqrt(hbar / (2 m omega_ax)), or the
// override verbatim when one is set.
[[nodiscard]] double lamb_dicke(const AtomConfig& atom, const TrapConfig& trap);

// Generalized Laguerre polynomial L_n^alpha(x) by three-term recurrence.
[[nodiscard]] double laguerre(int n, int alpha, double x);

// Signed Rabi frequency of |down,n> <-> |up,n+s>:
//   omega0 * exp(-eta^2/2) * eta^|s| * sqrt(n_<! / n_>!) * L_{n_<}^{|s|}(eta^2),
// n_< = min(n, n+s). Returns exactly 0 when n+s < 0.
[[nodiscard]] double rabi_frequency(int n, int s, double eta, double omega0);

// rabi_frequency(n, s, eta, omega0) for n = 0..n_max.
[[nodiscard]] std::vector<double> rabi_frequencies(int n_max, int s, double eta,
                                                   double omega0);

// Smallest n at which rabi_frequency(., s, eta, 1) changes sign (or hits zero)
// relative to its value at the lowest coupled n. nullopt if none up to n_max.
[[nodiscard]] std::optional<int> first_zero_crossing(int s, double eta, int n_max);

}  // namespace ioncool
