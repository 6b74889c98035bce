#include "ioncool/modchain.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>

#include "ioncool/error.hpp"

namespace ioncool {

namespace {

constexpr double kSeriesLimit = 8.0;
constexpr double kFirstJ0Zero = 2.404825557695773;
constexpr double kMinBeta = 1e-8;

double bessel_series(int k, double x) {
  // sum_m (-1)^m (x/2)^(2m+k) / (m! (m+k)!)
  const double h = 0.5 * x;
  double term = 1.0;
  for (int i = 1; i <= k; ++i) term *= h / i;
  double sum = term;
  const double h2 = h * h;
  for (int m = 1; m < 200; ++m) {
    term *= -h2 / (static_cast<double>(m) * (m + k));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

std::vector<double> bessel_miller(int max_order, double x) {
  const int start = 2 * ((std::max(max_order, static_cast<int>(x)) + 40) / 2);
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[static_cast<std::size_t>(start)] = 1e-30;
  for (int m = start; m >= 1; --m) {
    const auto mu = static_cast<std::size_t>(m);
    j[mu - 1] = (2.0 * m / x) * j[mu] - j[mu + 1];
    if (std::abs(j[mu - 1]) > 1e250) {
      for (std::size_t i = mu - 1; i < j.size(); ++i) j[i] *= 1e-250;
    }
  }
  // J_0 + 2 sum J_2k = 1
  double norm = j[0];
  for (std::size_t i = 2; i < j.size(); i += 2) norm += 2.0 * j[i];
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = j[i] / norm;
  return out;
}

}  // namespace

std::vector<double> bessel_j_orders(int max_order, double x) {
  if (max_order < 0) throw PreconditionError("bessel_j_orders: max_order must be >= 0");
  if (!(x >= 0.0) || !std::isfinite(x)) throw PreconditionError("bessel_j_orders: x must be finite and >= 0");
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x <= kSeriesLimit) {
    for (int k = 0; k <= max_order; ++k) out[static_cast<std::size_t>(k)] = bessel_series(k, x);
    return out;
  }
  return bessel_miller(max_order, x);
}

double bessel_j(int k, double x) {
  const int a = std::abs(k);
  const double v = bessel_j_orders(a, x)[static_cast<std::size_t>(a)];
  return (k < 0 && (a % 2 == 1)) ? -v : v;
}

double SidebandSpectrum::at(int k) const {
  if (std::abs(k) > max_order) throw PreconditionError("SidebandSpectrum: order outside table");
  return power[static_cast<std::size_t>(k + max_order)];
}

double SidebandSpectrum::carrier_to_first_ratio() const {
  if (max_order < 1) throw PreconditionError("SidebandSpectrum: table has no first-order sideband");
  return at(0) / at(1);
}

SidebandSpectrum sideband_powers(double beta, int max_order) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw PreconditionError("sideband_powers: beta must be >= 0");
  if (max_order < 0) throw PreconditionError("sideband_powers: max_order must be >= 0");
  const auto j = bessel_j_orders(max_order, beta);
  SidebandSpectrum s;
  s.max_order = max_order;
  s.power.resize(2 * static_cast<std::size_t>(max_order) + 1);
  double sum = 0.0;
  for (int k = -max_order; k <= max_order; ++k) {
    const double v = j[static_cast<std::size_t>(std::abs(k))];
    s.power[static_cast<std::size_t>(k + max_order)] = v * v;
    sum += v * v;
  }
  s.remainder = 1.0 - sum;
  return s;
}

void ModulationState::validate() const {
  if (!(carrier_frequency > 0.0) || !std::isfinite(carrier_frequency)) {
    throw PreconditionError("ModulationState: carrier_frequency must be > 0");
  }
  if (!(mod_frequency > 0.0) || !std::isfinite(mod_frequency)) {
    throw PreconditionError("ModulationState: mod_frequency must be > 0");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw PreconditionError("ModulationState: beta must be >= 0");
}

ModulationState shg_transform(const ModulationState& state) {
  return {2.0 * state.carrier_frequency, 2.0 * state.beta, state.mod_frequency};
}

double beta_from_ratio(double ratio) {
  if (!(ratio > 1.0) || !std::isfinite(ratio)) {
    throw PreconditionError("beta_from_ratio: ratio must be finite and > 1");
  }
  auto log_ratio = [](double b) {
    const auto j = bessel_j_orders(1, b);
    return 2.0 * (std::log(std::abs(j[0])) - std::log(std::abs(j[1])));
  };
  const double target = std::log(ratio);
  if (target > log_ratio(kMinBeta)) {
    throw PreconditionError("beta_from_ratio: ratio too large, beta below 1e-8");
  }
  // Ratio reaches 1 where J_0 = J_1, well inside (0, first zero of J_0).
  auto f = [&](double b) { return log_ratio(b) - target; };
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, kMinBeta, kFirstJ0Zero - 1e-9, boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (lo + hi);
}

void AomChain::validate() const {
  for (const auto& s : stages) {
    if (s.passes < 1) throw PreconditionError("AomChain: stage '" + s.label + "' needs passes >= 1");
    if (s.sign != 1 && s.sign != -1) throw PreconditionError("AomChain: stage '" + s.label + "' sign must be +1 or -1");
    if (s.frequency && (!(*s.frequency > 0.0) || !std::isfinite(*s.frequency))) {
      throw PreconditionError("AomChain: stage '" + s.label + "' frequency must be > 0");
    }
  }
}

double net_shift(const AomChain& chain) {
  chain.validate();
  double total = 0.0;
  for (const auto& s : chain.stages) {
    if (!s.frequency) throw PreconditionError("net_shift: stage '" + s.label + "' has no frequency");
    total += s.sign * s.passes * *s.frequency;
  }
  return total;
}

double solve_chain(const AomChain& chain, double target) {
  chain.validate();
  double known = 0.0;
  int coeff = 0;
  bool any_unknown = false;
  for (const auto& s : chain.stages) {
    if (s.frequency) {
      known += s.sign * s.passes * *s.frequency;
    } else {
      any_unknown = true;
      coeff += s.sign * s.passes;
    }
  }
  if (!any_unknown) throw PreconditionError("solve_chain: unsolvable, chain has no unknown stage");
  if (coeff == 0) throw PreconditionError("solve_chain: unsolvable, unknown stages cancel in the net shift");
  const double f = (target - known) / coeff;
  if (!(f > 0.0)) throw PreconditionError("solve_chain: unsolvable, required frequency is not positive");
  return f;
}

AomChain difference_chain(const AomChain& a, const AomChain& b) {
  AomChain out = a;
  for (auto s : b.stages) {
    s.sign = -s.sign;
    out.stages.push_back(std::move(s));
  }
  return out;
}

AomChain raman_difference_chain(double single_pass_frequency) {
  const AomChain sigma{{{single_pass_frequency, 1, +1, "sigma single pass"},
                        {std::nullopt, 2, +1, "sigma double pass"}}};
  const AomChain pi{{{single_pass_frequency, 1, -1, "pi single pass"},
                     {std::nullopt, 2, -1, "pi double pass"}}};
  return difference_chain(sigma, pi);
}

}  // namespace ioncool
