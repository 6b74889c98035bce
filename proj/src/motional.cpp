#include "ioncool/motional.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"

namespace ioncool {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void AtomConfig::validate() const {
  if (!positive_finite(mass_amu) || !positive_finite(transition_wavelength) ||
      !positive_finite(linewidth_gamma) || !positive_finite(hyperfine_splitting)) {
    throw PreconditionError("AtomConfig: all fields must be finite and > 0");
  }
}

AtomConfig AtomConfig::mg25() {
  return {constants::mg25_mass_amu, constants::mg25_wavelength,
          constants::mg25_linewidth, constants::mg25_hyperfine_splitting};
}

void TrapConfig::validate() const {
  if (!positive_finite(omega_ax) || !positive_finite(omega_rad)) {
    throw PreconditionError("TrapConfig: trap frequencies must be finite and > 0");
  }
  if (!(raman_geometry_factor > 0.0 && raman_geometry_factor <= 2.0)) {
    throw PreconditionError("TrapConfig: raman_geometry_factor must lie in (0, 2], got " +
                            std::to_string(raman_geometry_factor));
  }
  if (eta_override && !positive_finite(*eta_override)) {
    throw PreconditionError("TrapConfig: eta_override must be finite and > 0");
  }
}

MotionalDistribution::MotionalDistribution(std::vector<double> populations,
                                           double tail_tolerance)
    : populations_(std::move(populations)) {
  if (populations_.empty()) {
    throw PreconditionError("MotionalDistribution: empty population vector");
  }
  double sum = 0.0;
  for (double p : populations_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw PreconditionError("MotionalDistribution: entry outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw PreconditionError("MotionalDistribution: populations sum to " +
                            std::to_string(sum));
  }
  if (populations_.size() > 1 && populations_.back() >= tail_tolerance) {
    throw TruncationError("MotionalDistribution: population at n_max = " +
                          std::to_string(populations_.back()) + " exceeds tolerance");
  }
}

double MotionalDistribution::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < populations_.size(); ++n) {
    m += static_cast<double>(n) * populations_[n];
  }
  return m;
}

std::vector<double> thermal_weights(double nbar, int n_max) {
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (nbar <= 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double ratio = nbar / (nbar + 1.0);
  double term = 1.0 / (nbar + 1.0);
  double sum = 0.0;
  for (auto& v : p) {
    v = term;
    sum += term;
    term *= ratio;
  }
  for (auto& v : p) v /= sum;
  return p;
}

MotionalDistribution thermal_distribution(double nbar, int n_max, double tolerance) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
    throw PreconditionError("thermal_distribution: nbar must be finite and >= 0");
  }
  if (n_max < 0) throw PreconditionError("thermal_distribution: n_max < 0");
  if (nbar > 0.0) {
    // mass above n_max: (nbar/(nbar+1))^(n_max+1)
    const double discarded =
        std::exp((n_max + 1.0) * std::log(nbar / (nbar + 1.0)));
    if (discarded > tolerance) {
      throw TruncationError("thermal_distribution: n_max=" + std::to_string(n_max) +
                            " discards " + std::to_string(discarded) +
                            " of the population for nbar=" + std::to_string(nbar));
    }
  }
  return MotionalDistribution(thermal_weights(nbar, n_max), tolerance);
}

DopplerLimit doppler_limit_nbar(const AtomConfig& atom, double omega) {
  atom.validate();
  if (!(omega > 0.0)) throw PreconditionError("doppler_limit_nbar: omega must be > 0");
  DopplerLimit out;
  out.temperature = constants::hbar * atom.linewidth_gamma / (2.0 * constants::k_boltzmann);
  const double x = constants::hbar * omega / (constants::k_boltzmann * out.temperature);
  out.nbar = std::isinf(x) ? 0.0 : 1.0 / std::expm1(x);
  return out;
}

double lamb_dicke(const AtomConfig& atom, const TrapConfig& trap) {
  trap.validate();
  if (trap.eta_override) return *trap.eta_override;
  atom.validate();
  const double k_eff =
      trap.raman_geometry_factor * constants::two_pi / atom.transition_wavelength;
  const double mass = atom.mass_amu * constants::atomic_mass_unit;
  const double x0 = std::sqrt(constants::hbar / (2.0 * mass * trap.omega_ax));
  return k_eff * x0;
}

double laguerre(int n, int alpha, double x) {
  if (n < 0 || alpha < 0) throw PreconditionError("laguerre: n and alpha must be >= 0");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double rabi_frequency(int n, int s, double eta, double omega0) {
  if (n < 0) throw PreconditionError("rabi_frequency: n must be >= 0");
  if (n + s < 0) return 0.0;
  const int lo = std::min(n, n + s);
  const int hi = std::max(n, n + s);
  const int order = std::abs(s);
  double ratio = 1.0;  // sqrt(lo! / hi!)
  for (int k = lo + 1; k <= hi; ++k) ratio /= std::sqrt(static_cast<double>(k));
  const double eta2 = eta * eta;
  return omega0 * std::exp(-0.5 * eta2) * std::pow(eta, order) * ratio *
         laguerre(lo, order, eta2);
}

std::vector<double> rabi_frequencies(int n_max, int s, double eta, double omega0) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] = rabi_frequency(n, s, eta, omega0);
  return out;
}

std::optional<int> first_zero_crossing(int s, double eta, int n_max) {
  if (n_max < 1) throw PreconditionError("first_zero_crossing: n_max must be >= 1");
  const int start = std::max(0, -s);
  if (start > n_max) return std::nullopt;
  const double ref = rabi_frequency(start, s, eta, 1.0);
  for (int n = start + 1; n <= n_max; ++n) {
    const double v = rabi_frequency(n, s, eta, 1.0);
    if (v == 0.0 || std::signbit(v) != std::signbit(ref)) return n;
  }
  return std::nullopt;
}

}  // namespace ioncool
