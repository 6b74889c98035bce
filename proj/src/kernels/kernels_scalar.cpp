#include "ioncool/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace ioncool::kernels::scalar {

void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration) {
  const double d2 = detuning * detuning;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double w2 = omega[i] * omega[i];
    const double g2 = w2 + d2;
    if (g2 == 0.0) continue;
    const double s = std::sin(0.5 * std::sqrt(g2) * duration);
    const double p = (w2 / g2) * s * s;
    const double lo = lower[i];
    const double up = upper[i];
    lower[i] = lo + p * (up - lo);
    upper[i] = up + p * (lo - up);
  }
}

double weighted_sin2_sum(std::span<const double> weights,
                         std::span<const double> omega, double duration) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double s = std::sin(0.5 * omega[i] * duration);
    acc += weights[i] * s * s;
  }
  return acc;
}

MixtureScore mixture_score(std::span<const double> counts,
                           std::span<const double> psi_a,
                           std::span<const double> psi_b, double a) {
  MixtureScore out;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0.0) continue;
    const double d = psi_a[k] - psi_b[k];
    const double m = a * psi_a[k] + (1.0 - a) * psi_b[k];
    const double r = d / m;
    out.score += counts[k] * r;
    out.information += counts[k] * r * r;
  }
  return out;
}

}  // namespace ioncool::kernels::scalar
