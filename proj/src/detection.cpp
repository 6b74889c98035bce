#include "ioncool/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "ioncool/error.hpp"
#include "ioncool/kernels.hpp"

namespace ioncool {

namespace {

constexpr double kTailTolerance = 1e-6;

// Poisson pmf for k = 0..k_max (not renormalized).
std::vector<double> poisson_pmf(double mean, int k_max) {
  std::vector<double> p(static_cast<std::size_t>(k_max) + 1, 0.0);
  double term = std::exp(-mean);
  for (int k = 0; k <= k_max; ++k) {
    p[static_cast<std::size_t>(k)] = term;
    term *= mean / (k + 1);
  }
  return p;
}

double poisson_term(int k, double mean) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

// Fraction of the exposure a depumped dark ion spends bright, averaged:
// 1 - (1 - e^-x)/x with x = rate * exposure.
double mean_bright_fraction(double x) {
  if (x == 0.0) return 0.0;
  return 1.0 + std::expm1(-x) / x;
}

void normalize_checked(std::vector<double>& p, const char* what) {
  double sum = 0.0;
  for (double v : p) sum += v;
  const double tail = 1.0 - sum;
  if (tail > kTailTolerance) {
    throw TruncationError(std::string("reference_distributions: k_max too small, ") + what +
                          " tail = " + std::to_string(tail));
  }
  for (double& v : p) v /= sum;
}

}  // namespace

void DetectionModel::validate() const {
  if (!(mean_bright >= 0.0) || !(mean_dark >= 0.0) || !std::isfinite(mean_bright)) {
    throw PreconditionError("DetectionModel: means must be finite and >= 0");
  }
  if (!(mean_bright > mean_dark)) {
    throw PreconditionError("DetectionModel: mean_bright must exceed mean_dark");
  }
  if (!(exposure > 0.0)) throw PreconditionError("DetectionModel: exposure must be > 0");
  if (!(depump_rate >= 0.0) || !std::isfinite(depump_rate)) {
    throw PreconditionError("DetectionModel: depump_rate must be finite and >= 0");
  }
  if (k_max < 1) throw PreconditionError("DetectionModel: k_max must be >= 1");
}

DetectionModel DetectionModel::with_exposure(double new_exposure) const {
  if (!(new_exposure > 0.0)) throw PreconditionError("with_exposure: exposure must be > 0");
  DetectionModel m = *this;
  const double scale = new_exposure / exposure;
  m.mean_bright *= scale;
  m.mean_dark *= scale;
  m.exposure = new_exposure;
  return m;
}

DetectionModel DetectionModel::defaults() {
  DetectionModel m;
  m.depump_rate = depump_rate_for_dark_mean(m, 0.2);
  return m;
}

double depump_rate_for_dark_mean(const DetectionModel& model, double target_dark_mean) {
  DetectionModel probe = model;
  probe.depump_rate = 0.0;
  probe.validate();
  const double signal = model.mean_bright - model.mean_dark;
  const double need = target_dark_mean - model.mean_dark;
  if (need == 0.0) return 0.0;
  if (!(need > 0.0) || !(need < signal)) {
    throw PreconditionError("depump_rate_for_dark_mean: target must lie in [mean_dark, mean_bright)");
  }
  auto f = [&](double x) { return signal * mean_bright_fraction(x) - need; };
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, 1e-14, 1e6, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (lo + hi) / model.exposure;
}

ReferenceDistributions reference_distributions(const DetectionModel& model) {
  model.validate();
  ReferenceDistributions out;
  out.psi_down = poisson_pmf(model.mean_bright, model.k_max);
  normalize_checked(out.psi_down, "psi_down");

  const double x = model.depump_rate * model.exposure;
  if (x == 0.0) {
    out.psi_up = poisson_pmf(model.mean_dark, model.k_max);
  } else {
    // Switch time tau ~ Exp(rate). The bright fraction u = (T - tau)/T of the
    // exposure has density x e^{-x(1-u)} on [0,1] plus an atom e^{-x} at u = 0.
    const double signal = model.mean_bright - model.mean_dark;
    const double stay_dark = std::exp(-x);
    out.psi_up.resize(static_cast<std::size_t>(model.k_max) + 1);
    for (int k = 0; k <= model.k_max; ++k) {
      auto integrand = [&](double u) {
        return x * std::exp(-x * (1.0 - u)) * poisson_term(k, model.mean_dark + signal * u);
      };
      const double switched =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 8, 1e-13);
      out.psi_up[static_cast<std::size_t>(k)] = stay_dark * poisson_term(k, model.mean_dark) + switched;
    }
  }
  normalize_checked(out.psi_up, "psi_up");
  return out;
}

double distribution_mean(std::span<const double> psi) {
  double m = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) m += static_cast<double>(k) * psi[k];
  return m;
}

double overlap(std::span<const double> psi_down, std::span<const double> psi_up) {
  if (psi_down.size() != psi_up.size()) {
    throw PreconditionError("overlap: distributions must have equal length");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < psi_down.size(); ++k) acc += psi_down[k] * psi_up[k];
  return acc;
}

void Histogram::validate() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  if (sum != shots) throw PreconditionError("Histogram: counts do not sum to shots");
}

double Histogram::mean() const {
  if (shots == 0) return 0.0;
  double m = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) m += static_cast<double>(k * counts[k]);
  return m / static_cast<double>(shots);
}

Histogram simulate_detection(double a, const ReferenceDistributions& refs,
                             std::uint64_t shots, Rng& rng) {
  if (!(a >= 0.0 && a <= 1.0)) throw PreconditionError("simulate_detection: a must lie in [0,1]");
  if (shots < 1) throw PreconditionError("simulate_detection: shots must be >= 1");
  if (refs.psi_down.size() != refs.psi_up.size() || refs.psi_down.empty()) {
    throw PreconditionError("simulate_detection: malformed reference distributions");
  }
  auto cdf_of = [](const std::vector<double>& p) {
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) c[k] = (acc += p[k]);
    c.back() = 1.0;
    return c;
  };
  const auto cdf_bright = cdf_of(refs.psi_down);
  const auto cdf_dark = cdf_of(refs.psi_up);

  Histogram h;
  h.counts.assign(refs.psi_down.size(), 0);
  h.shots = shots;
  for (std::uint64_t i = 0; i < shots; ++i) {
    const auto& cdf = rng.bernoulli(a) ? cdf_bright : cdf_dark;
    const double u = rng.uniform();
    const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    ++h.counts[std::min(k, cdf.size() - 1)];
  }
  return h;
}

Histogram simulate_detection(double a, const DetectionModel& model, std::uint64_t shots,
                             std::uint64_t seed) {
  Rng rng(seed);
  return simulate_detection(a, reference_distributions(model), shots, rng);
}

PopulationFit fit_population(std::span<const double> counts, std::span<const double> psi_down,
                             std::span<const double> psi_up) {
  if (counts.size() != psi_down.size() || counts.size() != psi_up.size()) {
    throw PreconditionError("fit_population: histogram and references differ in length");
  }
  double shots = 0.0;
  double max_diff = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    shots += counts[k];
    max_diff = std::max(max_diff, std::abs(psi_down[k] - psi_up[k]));
    if (counts[k] > 0.0 && psi_down[k] == 0.0 && psi_up[k] == 0.0) {
      throw FitError("fit_population: counts at k=" + std::to_string(k) +
                     " have zero likelihood under both references");
    }
  }
  if (!(shots >= 1.0)) throw PreconditionError("fit_population: histogram is empty");
  if (max_diff < 1e-12) {
    throw FitError("fit_population: reference distributions are indistinguishable");
  }

  auto score = [&](double a) { return kernels::mixture_score(counts, psi_down, psi_up, a); };
  PopulationFit fit;
  const auto s0 = score(0.0);
  const auto s1 = score(1.0);
  // exact data put the score at a boundary to rounding level
  const double tol = 1e-10 * shots;
  if (s0.score <= tol) {
    fit.a = 0.0;
    fit.at_boundary = true;
  } else if (s1.score >= -tol) {
    fit.a = 1.0;
    fit.at_boundary = true;
  } else {
    // Concave log-likelihood: the score is decreasing. Safeguarded Newton.
    double lo = 0.0, hi = 1.0, a = 0.5;
    for (int it = 0; it < 200; ++it) {
      const auto s = score(a);
      if (s.score > 0.0) lo = a; else hi = a;
      double next = a + s.score / s.information;
      if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
      if (std::abs(next - a) < 1e-14 || hi - lo < 1e-14) {
        a = next;
        break;
      }
      a = next;
    }
    fit.a = a;
  }
  const double info = score(fit.a).information;
  fit.sigma = info > 0.0 && std::isfinite(info) ? 1.0 / std::sqrt(info) : 0.0;
  return fit;
}

PopulationFit fit_population(const Histogram& hist, std::span<const double> psi_down,
                             std::span<const double> psi_up) {
  hist.validate();
  std::vector<double> c(hist.counts.begin(), hist.counts.end());
  return fit_population(c, psi_down, psi_up);
}

}  // namespace ioncool
