#include "ioncool/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>

#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"
#include "ioncool/kernels.hpp"
#include "ioncool/least_squares.hpp"
#include "ioncool/motional.hpp"

namespace ioncool {

namespace {

using VectorModel =
    std::function<void(std::span<const double> params, std::span<const double> u, std::span<double> out)>;

struct ParamSpec {
  std::string name;
  double init = 0.0;
  double lower = -INFINITY;
  double upper = INFINITY;
  bool fixed = false;
  // input-unit value = offset + scale * internal value
  double scale = 1.0;
  double offset = 0.0;
};

struct FitOutcome {
  std::vector<double> values;  // internal coordinates, all parameters
  std::vector<double> cov;     // internal coordinates, full n x n (fixed rows zero)
  LeastSquaresResult raw;
};

FitOutcome fit_model(const std::vector<ParamSpec>& specs, const std::vector<double>& u,
                     const ScanData& scan, const VectorModel& model) {
  const std::size_t n = specs.size();
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < n; ++j) {
    if (!specs[j].fixed) free.push_back(j);
  }
  if (scan.size() < free.size()) throw FitError("fit: fewer data points than free parameters");

  std::vector<double> full(n);
  for (std::size_t j = 0; j < n; ++j) full[j] = specs[j].init;

  LeastSquaresProblem prob;
  prob.num_residuals = scan.size();
  std::vector<double> model_out(scan.size());
  prob.residuals = [&, full](std::span<const double> p, std::span<double> r) mutable {
    for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = p[i];
    model(full, u, model_out);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (scan.y[i] - model_out[i]) / scan.sigma_y[i];
  };
  std::vector<double> init;
  for (auto j : free) {
    prob.lower.push_back(specs[j].lower);
    prob.upper.push_back(specs[j].upper);
    init.push_back(std::clamp(specs[j].init, specs[j].lower, specs[j].upper));
  }

  FitOutcome out;
  out.raw = levenberg_marquardt(prob, init);
  out.values = full;
  for (std::size_t i = 0; i < free.size(); ++i) out.values[free[i]] = out.raw.params[i];
  out.cov.assign(n * n, 0.0);
  for (std::size_t a = 0; a < free.size(); ++a) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      out.cov[free[a] * n + free[b]] = out.raw.cov(a, b);
    }
  }
  return out;
}

FitReport to_report(const std::vector<ParamSpec>& specs, const FitOutcome& fit, std::size_t points) {
  const std::size_t n = specs.size();
  FitReport rep;
  std::size_t free_count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    rep.names.push_back(specs[j].name);
    rep.values.push_back(specs[j].offset + specs[j].scale * fit.values[j]);
    if (!specs[j].fixed) ++free_count;
  }
  rep.covariance.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rep.covariance[i * n + j] = specs[i].scale * specs[j].scale * fit.cov[i * n + j];
    }
    rep.sigmas.push_back(std::sqrt(std::max(rep.covariance[i * n + i], 0.0)));
  }
  rep.chi2 = fit.raw.chi2;
  rep.dof = static_cast<int>(points) - static_cast<int>(free_count);
  rep.residual_norm = std::sqrt(fit.raw.chi2);
  rep.iterations = fit.raw.iterations;
  rep.converged = fit.raw.converged;
  rep.low_confidence = !fit.raw.converged || fit.raw.rank_deficient;
  rep.message = fit.raw.message;
  if (fit.raw.rank_deficient) rep.message += "; normal matrix rank deficient";
  return rep;
}

Estimate estimate_at(const FitReport& rep, std::size_t j) { return {rep.values[j], rep.sigmas[j]}; }

double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> scaled(const std::vector<double>& x, double offset, double scale) {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - offset) / scale;
  return u;
}

// Time-axis scale shared by the oscillation fitters.
double time_scale(const ScanData& scan) {
  const double s = max_abs(scan.x);
  if (!(s > 0.0)) throw FitError("fit: x axis has zero extent");
  return s;
}

// Linear least squares for y ~ C + alpha cos(w u) + beta sin(w u) (+ decay
// envelope), returning (contrast, phase, baseline) of the flop parametrization.
struct LinearSin {
  double contrast, phase, baseline, chi2;
};

LinearSin linear_sinusoid(const std::vector<double>& u, const ScanData& scan, double w,
                          double gamma) {
  // Normal equations in 3 unknowns.
  double A[3][3] = {};
  double b[3] = {};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double wt = 1.0 / (scan.sigma_y[i] * scan.sigma_y[i]);
    const double env = std::exp(-gamma * u[i]);
    const double f[3] = {1.0, env * std::cos(w * u[i]), env * std::sin(w * u[i])};
    for (int r = 0; r < 3; ++r) {
      b[r] += wt * f[r] * scan.y[i];
      for (int c = 0; c < 3; ++c) A[r][c] += wt * f[r] * f[c];
    }
  }
  // Gaussian elimination with partial pivoting.
  int perm[3] = {0, 1, 2};
  double M[3][4];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) M[r][c] = A[r][c];
    M[r][3] = b[r];
  }
  for (int k = 0; k < 3; ++k) {
    int piv = k;
    for (int r = k + 1; r < 3; ++r) {
      if (std::abs(M[r][k]) > std::abs(M[piv][k])) piv = r;
    }
    std::swap(M[k], M[piv]);
    std::swap(perm[k], perm[piv]);
    if (std::abs(M[k][k]) < 1e-300) return {0.0, 0.0, 0.0, INFINITY};
    for (int r = k + 1; r < 3; ++r) {
      const double f = M[r][k] / M[k][k];
      for (int c = k; c < 4; ++c) M[r][c] -= f * M[k][c];
    }
  }
  double sol[3];
  for (int k = 2; k >= 0; --k) {
    double acc = M[k][3];
    for (int c = k + 1; c < 3; ++c) acc -= M[k][c] * sol[c];
    sol[k] = acc / M[k][k];
  }
  const double C = sol[0], alpha = sol[1], beta = sol[2];
  // y = b + c/2 - (c/2) e cos(wu + phi) = b + c/2 - (c/2)cos(phi) e cos + (c/2) sin(phi) e sin
  const double half_c = std::hypot(alpha, beta);
  LinearSin out;
  out.contrast = 2.0 * half_c;
  out.phase = half_c > 0.0 ? std::atan2(beta, -alpha) : 0.0;
  out.baseline = C - half_c;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double env = std::exp(-gamma * u[i]);
    const double m = C + alpha * env * std::cos(w * u[i]) + beta * env * std::sin(w * u[i]);
    const double r = (scan.y[i] - m) / scan.sigma_y[i];
    chi2 += r * r;
  }
  out.chi2 = chi2;
  return out;
}

double wrap_phase(double phi) {
  phi = std::remainder(phi, constants::two_pi);
  return phi;
}

// e^{-eta^2/2} L_n(eta^2) for n = 0..n_max in O(n_max).
std::vector<double> carrier_coefficients(int n_max, double eta) {
  std::vector<double> c(static_cast<std::size_t>(n_max) + 1);
  const double x = eta * eta;
  const double pre = std::exp(-0.5 * x);
  double prev = 1.0, cur = 1.0 - x;
  c[0] = pre;
  if (n_max >= 1) c[1] = pre * cur;
  for (int k = 1; k < n_max; ++k) {
    const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
    c[static_cast<std::size_t>(k) + 1] = pre * cur;
  }
  return c;
}

int thermal_cutoff(double nbar) {
  if (nbar <= 0.0) return 0;
  const double n = std::log(1e-12) / std::log(nbar / (nbar + 1.0));
  return static_cast<int>(std::min(std::ceil(n), 8000.0));
}

constexpr double kMaxFitNbar = 200.0;

}  // namespace

void ScanData::validate() const {
  if (x.empty() || y.size() != x.size() || sigma_y.size() != x.size()) {
    throw PreconditionError("ScanData: x, y, sigma_y must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw PreconditionError("ScanData: non-finite x");
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw PreconditionError("ScanData: y outside [0,1]");
    if (!(sigma_y[i] > 0.0) || !std::isfinite(sigma_y[i])) {
      throw PreconditionError("ScanData: sigma_y must be finite and > 0");
    }
  }
}

SidebandThermometry nbar_from_sidebands(double rho_red, double rho_blue, double sigma_red,
                                        double sigma_blue) {
  if (!(rho_red >= 0.0 && rho_red <= 1.0 && rho_blue >= 0.0 && rho_blue <= 1.0)) {
    throw PreconditionError("nbar_from_sidebands: amplitudes must lie in [0,1]");
  }
  if (!(sigma_red >= 0.0) || !(sigma_blue >= 0.0)) {
    throw PreconditionError("nbar_from_sidebands: uncertainties must be >= 0");
  }
  if (!(rho_red < rho_blue)) {
    throw FitError("nbar_from_sidebands: thermometry invalid, red amplitude >= blue (Q >= 1)");
  }
  SidebandThermometry t;
  t.q = rho_red / rho_blue;
  const double dq_dr = 1.0 / rho_blue;
  const double dq_db = -rho_red / (rho_blue * rho_blue);
  t.sigma_q = std::hypot(dq_dr * sigma_red, dq_db * sigma_blue);
  t.nbar = t.q / (1.0 - t.q);
  t.sigma_nbar = t.sigma_q / ((1.0 - t.q) * (1.0 - t.q));
  t.p0 = 1.0 - t.q;
  t.sigma_p0 = t.sigma_q;
  return t;
}

double leakage_corrected_amplitude(double amplitude, double leak_up_rate, double probe_duration) {
  return amplitude - std::min(1.0, leak_up_rate * probe_duration);
}

GaussianFit fit_gaussian_resonance(const ScanData& scan, const GaussianFitOptions& options) {
  scan.validate();
  if (scan.size() < 5) throw PreconditionError("fit_gaussian_resonance: need at least 5 points");
  const auto [xmin_it, xmax_it] = std::minmax_element(scan.x.begin(), scan.x.end());
  const double offset = 0.5 * (*xmin_it + *xmax_it);
  const double scale = 0.5 * (*xmax_it - *xmin_it);
  if (!(scale > 0.0)) throw FitError("fit_gaussian_resonance: x axis has zero extent");
  const auto u = scaled(scan.x, offset, scale);

  // Baseline: mean of the lowest quarter of the data. Peak: largest point.
  std::vector<double> ys = scan.y;
  std::sort(ys.begin(), ys.end());
  const std::size_t q = std::max<std::size_t>(1, ys.size() / 4);
  const double base0 = std::accumulate(ys.begin(), ys.begin() + static_cast<long>(q), 0.0) / static_cast<double>(q);
  const auto peak = static_cast<std::size_t>(std::max_element(scan.y.begin(), scan.y.end()) - scan.y.begin());
  const double amp0 = scan.y[peak] - base0;
  double center0 = options.fixed_center ? (*options.fixed_center - offset) / scale : u[peak];
  double width0 = 1.0 / 3.0;
  if (amp0 > 0.0) {
    double lo = u[peak], hi = u[peak];
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (scan.y[i] - base0 >= 0.5 * amp0) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
      }
    }
    if (hi > lo) width0 = (hi - lo) / 2.3548;
  } else {
    center0 = options.fixed_center ? center0 : 0.0;
  }
  if (options.fixed_width) width0 = *options.fixed_width / scale;
  const double min_width = 1e-6;
  width0 = std::max(width0, 2.0 * min_width);

  std::vector<ParamSpec> specs = {
      {"center", center0, -1.5, 1.5, options.fixed_center.has_value(), scale, offset},
      {"amplitude", amp0, -INFINITY, INFINITY, false, 1.0, 0.0},
      {"width", width0, min_width, 10.0, options.fixed_width.has_value(), scale, 0.0},
      {"baseline", base0, -INFINITY, INFINITY, false, 1.0, 0.0},
  };
  if (options.fixed_center) specs[0].lower = specs[0].upper = center0;
  if (options.fixed_width) specs[2].lower = specs[2].upper = width0;

  const VectorModel model = [](std::span<const double> p, std::span<const double> uu, std::span<double> out) {
    for (std::size_t i = 0; i < uu.size(); ++i) {
      const double z = (uu[i] - p[0]) / p[2];
      out[i] = p[3] + p[1] * std::exp(-0.5 * z * z);
    }
  };
  const FitOutcome fit = fit_model(specs, u, scan, model);
  GaussianFit out;
  out.report = to_report(specs, fit, scan.size());
  out.center = estimate_at(out.report, 0);
  out.amplitude = estimate_at(out.report, 1);
  out.width = estimate_at(out.report, 2);
  out.baseline = estimate_at(out.report, 3);
  // With a vanishing amplitude the center and width are unidentifiable; that
  // alone does not make the amplitude estimate unreliable.
  if (out.report.low_confidence && out.report.converged &&
      std::abs(out.amplitude.value) <= 3.0 * out.amplitude.sigma) {
    out.report.low_confidence = false;
  }
  return out;
}

std::optional<double> estimate_angular_frequency(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 4 || y.size() != n) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  const double span = x[order.back()] - x[order.front()];
  if (!(span > 0.0)) return std::nullopt;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> yc(n);
  double ymax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    yc[i] = y[i] - mean;
    ymax = std::max(ymax, std::abs(yc[i]));
  }
  if (ymax < 1e-12) return std::nullopt;

  double dt_min = span;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = x[order[i]] - x[order[i - 1]];
    if (d > 0.0) dt_min = std::min(dt_min, d);
  }
  auto power = [&](double w) {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c += yc[i] * std::cos(w * x[i]);
      s += yc[i] * std::sin(w * x[i]);
    }
    return c * c + s * s;
  };

  const double w_lo = constants::pi / span;
  const double w_hi = constants::pi / dt_min;
  double dw = constants::two_pi / (16.0 * span);
  if ((w_hi - w_lo) / dw > 20000.0) dw = (w_hi - w_lo) / 20000.0;
  std::vector<double> grid, pw;
  for (double w = w_lo; w <= w_hi; w += dw) {
    grid.push_back(w);
    pw.push_back(power(w));
  }
  if (grid.size() >= 3) {
    const auto k = static_cast<std::size_t>(std::max_element(pw.begin(), pw.end()) - pw.begin());
    std::vector<double> sorted = pw;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (k > 0 && k + 1 < grid.size() && pw[k] > 5.0 * median) {
      // Golden-section refinement of the peak.
      double a = grid[k - 1], b = grid[k + 1];
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = power(c), fd = power(d);
      for (int it = 0; it < 60; ++it) {
        if (fc > fd) {
          b = d; d = c; fd = fc; c = b - g * (b - a); fc = power(c);
        } else {
          a = c; c = d; fc = fd; d = a + g * (b - a); fd = power(d);
        }
      }
      return 0.5 * (a + b);
    }
  }

  // Fallback: zero-crossing rate of the mean-subtracted data.
  std::vector<double> crossings;
  for (std::size_t i = 1; i < n; ++i) {
    const double y0 = yc[order[i - 1]], y1 = yc[order[i]];
    if ((y0 < 0.0 && y1 >= 0.0) || (y0 >= 0.0 && y1 < 0.0)) {
      const double x0 = x[order[i - 1]], x1 = x[order[i]];
      crossings.push_back(x0 + (x1 - x0) * (-y0) / (y1 - y0));
    }
  }
  if (crossings.size() >= 3) {
    const double extent = crossings.back() - crossings.front();
    if (extent > 0.0) return constants::pi * static_cast<double>(crossings.size() - 1) / extent;
  }
  return std::nullopt;
}

SinusoidFit fit_rabi_sinusoid(const ScanData& scan) {
  scan.validate();
  if (scan.size() < 5) throw PreconditionError("fit_rabi_sinusoid: need at least 5 points");
  const double scale = time_scale(scan);
  const auto u = scaled(scan.x, 0.0, scale);

  SinusoidFit out;
  std::string note;
  double w0;
  if (auto w = estimate_angular_frequency(u, scan.y)) {
    w0 = *w;
  } else {
    // No oscillation visible: two periods across the scan, the minimum the
    // fitter is specified for. Contrast then comes out near zero.
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    w0 = 2.0 * constants::two_pi / (*hi - *lo);
    out.frequency_fallback = true;
    note = "; spectral frequency estimate failed, fallback frequency used";
  }
  const LinearSin lin = linear_sinusoid(u, scan, w0, 0.0);

  std::vector<ParamSpec> specs = {
      {"omega", w0, 0.0, INFINITY, false, 1.0 / scale, 0.0},
      {"contrast", lin.contrast, -INFINITY, INFINITY, false, 1.0, 0.0},
      {"phase", lin.phase, -INFINITY, INFINITY, false, 1.0, 0.0},
      {"baseline", lin.baseline, -INFINITY, INFINITY, false, 1.0, 0.0},
  };
  const VectorModel model = [](std::span<const double> p, std::span<const double> uu, std::span<double> o) {
    for (std::size_t i = 0; i < uu.size(); ++i) {
      o[i] = p[3] + 0.5 * p[1] * (1.0 - std::cos(p[0] * uu[i] + p[2]));
    }
  };
  FitOutcome fit = fit_model(specs, u, scan, model);
  if (fit.values[1] < 0.0) {
    // (c, phi, b) and (-c, phi + pi, b + c) describe the same curve.
    fit.values[3] += fit.values[1];
    fit.values[1] = -fit.values[1];
    fit.values[2] += constants::pi;
    // cov: b' = b + c, c' = -c
    const std::size_t n = 4;
    std::vector<double> T(n * n, 0.0);
    T[0] = 1.0; T[1 * n + 1] = -1.0; T[2 * n + 2] = 1.0; T[3 * n + 3] = 1.0; T[3 * n + 1] = 1.0;
    std::vector<double> tmp(n * n, 0.0), res(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) tmp[i * n + j] += T[i * n + k] * fit.cov[k * n + j];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) res[i * n + j] += tmp[i * n + k] * T[j * n + k];
    fit.cov = res;
  }
  fit.values[2] = wrap_phase(fit.values[2]);
  out.report = to_report(specs, fit, scan.size());
  out.report.message += note;
  if (out.frequency_fallback && std::abs(out.report.values[1]) > 3.0 * out.report.sigmas[1]) {
    out.report.low_confidence = true;
  }
  out.omega = estimate_at(out.report, 0);
  out.contrast = estimate_at(out.report, 1);
  out.phase = estimate_at(out.report, 2);
  out.baseline = estimate_at(out.report, 3);
  return out;
}

DecayingSinusoidFit fit_decaying_sinusoid(const ScanData& scan) {
  scan.validate();
  if (scan.size() < 6) throw PreconditionError("fit_decaying_sinusoid: need at least 6 points");
  const double scale = time_scale(scan);
  const auto u = scaled(scan.x, 0.0, scale);
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double span = *hi - *lo;

  std::string note;
  double w0;
  if (auto w = estimate_angular_frequency(u, scan.y)) {
    w0 = *w;
  } else {
    w0 = 2.0 * constants::two_pi / span;
    note = "; spectral frequency estimate failed, fallback frequency used";
  }

  const VectorModel model = [](std::span<const double> p, std::span<const double> uu, std::span<double> o) {
    for (std::size_t i = 0; i < uu.size(); ++i) {
      o[i] = p[4] + 0.5 * p[2] * (1.0 - std::exp(-p[1] * uu[i]) * std::cos(p[0] * uu[i] + p[3]));
    }
  };

  // Multi-start over the decay rate; keep the best chi2.
  std::optional<FitOutcome> best;
  std::vector<ParamSpec> specs;
  for (double g0 : {0.0, 0.5 / span, 2.0 / span, 6.0 / span}) {
    const LinearSin lin = linear_sinusoid(u, scan, w0, g0);
    std::vector<ParamSpec> trial = {
        {"omega", w0, 0.0, INFINITY, false, 1.0 / scale, 0.0},
        {"gamma_decay", g0, 0.0, INFINITY, false, 1.0 / scale, 0.0},
        {"contrast", lin.contrast, 0.0, INFINITY, false, 1.0, 0.0},
        {"phase", lin.phase, -INFINITY, INFINITY, false, 1.0, 0.0},
        {"baseline", lin.baseline, -INFINITY, INFINITY, false, 1.0, 0.0},
    };
    FitOutcome fit = fit_model(trial, u, scan, model);
    if (!best || fit.raw.chi2 < best->raw.chi2) {
      best = std::move(fit);
      specs = trial;
    }
  }
  best->values[3] = wrap_phase(best->values[3]);

  DecayingSinusoidFit out;
  out.report = to_report(specs, *best, scan.size());
  out.report.message += note;
  out.omega = estimate_at(out.report, 0);
  out.gamma_decay = estimate_at(out.report, 1);
  out.contrast = estimate_at(out.report, 2);
  out.phase = estimate_at(out.report, 3);
  out.baseline = estimate_at(out.report, 4);
  const double period = constants::two_pi / std::max(out.omega.value, 1e-300);
  const bool overdamped = out.gamma_decay.value * period > 2.0;
  const bool loose = !(out.omega.sigma <= 0.1 * out.omega.value);
  if (overdamped || loose) {
    out.report.low_confidence = true;
    out.report.message += overdamped ? "; overdamped: envelope decays faster than the oscillation"
                                     : "; oscillation frequency poorly determined";
  }
  return out;
}

double thermal_carrier_excitation(double nbar, double omega0, double eta, double duration) {
  const int cutoff = thermal_cutoff(nbar);
  const auto weights = thermal_weights(nbar, cutoff);
  auto omegas = carrier_coefficients(cutoff, eta);
  for (double& w : omegas) w *= omega0;
  return kernels::weighted_sin2_sum(weights, omegas, duration);
}

ThermalFlopFit fit_thermal_flop(const ScanData& scan, double eta) {
  scan.validate();
  if (scan.size() < 4) throw PreconditionError("fit_thermal_flop: need at least 4 points");
  if (!(eta > 0.0)) throw PreconditionError("fit_thermal_flop: eta must be > 0");
  const double scale = time_scale(scan);
  const auto u = scaled(scan.x, 0.0, scale);

  const auto coeff = carrier_coefficients(thermal_cutoff(kMaxFitNbar), eta);
  const VectorModel model = [&coeff](std::span<const double> p, std::span<const double> uu,
                                     std::span<double> o) {
    const double nbar = std::max(p[0], 0.0);
    const int cutoff = thermal_cutoff(nbar);
    const auto weights = thermal_weights(nbar, cutoff);
    std::vector<double> omegas(weights.size());
    for (std::size_t n = 0; n < omegas.size(); ++n) omegas[n] = p[1] * coeff[n];
    for (std::size_t i = 0; i < uu.size(); ++i) o[i] = kernels::weighted_sin2_sum(weights, omegas, uu[i]);
  };

  // Coarse grid over (nbar, omega0) around the spectral estimate.
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double span = *hi - *lo;
  std::vector<double> w_candidates;
  if (auto w = estimate_angular_frequency(u, scan.y)) {
    for (int k = 0; k <= 30; ++k) w_candidates.push_back(*w / (0.2 + 0.04 * k));
  }
  double dt_min = span;
  {
    std::vector<double> us = u;
    std::sort(us.begin(), us.end());
    for (std::size_t i = 1; i < us.size(); ++i) {
      if (us[i] > us[i - 1]) dt_min = std::min(dt_min, us[i] - us[i - 1]);
    }
  }
  for (double w = constants::pi / span; w <= constants::pi / dt_min; w *= 1.15) w_candidates.push_back(w);

  std::vector<double> out_buf(u.size());
  double best_chi2 = INFINITY, best_n = 0.0, best_w = w_candidates.front();
  for (double nb : {0.0, 0.02, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0}) {
    for (double w : w_candidates) {
      const double p[2] = {nb, w};
      model(p, u, out_buf);
      double chi2 = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = (scan.y[i] - out_buf[i]) / scan.sigma_y[i];
        chi2 += r * r;
      }
      if (chi2 < best_chi2) {
        best_chi2 = chi2;
        best_n = nb;
        best_w = w;
      }
    }
  }

  const std::vector<ParamSpec> specs = {
      {"nbar", best_n, 0.0, kMaxFitNbar, false, 1.0, 0.0},
      {"omega0", best_w, 0.0, INFINITY, false, 1.0 / scale, 0.0},
  };
  const FitOutcome fit = fit_model(specs, u, scan, model);
  ThermalFlopFit out;
  out.report = to_report(specs, fit, scan.size());
  out.nbar = estimate_at(out.report, 0);
  out.omega0 = estimate_at(out.report, 1);
  out.flat_likelihood = fit.raw.rank_deficient ||
                        !(out.nbar.sigma <= std::max(out.nbar.value, 0.5)) ||
                        !(out.omega0.sigma <= 0.25 * out.omega0.value);
  if (out.flat_likelihood) {
    out.report.low_confidence = true;
    out.report.message += "; flat likelihood: data do not constrain nbar and omega0";
  }
  return out;
}

SidebandPairAnalysis analyze_sideband_pair(const ScanData& red, const ScanData& blue) {
  SidebandPairAnalysis out;
  out.blue = fit_gaussian_resonance(blue);
  GaussianFitOptions opts;
  opts.fixed_center = out.blue.center.value;
  opts.fixed_width = out.blue.width.value;
  out.red = fit_gaussian_resonance(red, opts);
  const double rho_b = std::clamp(out.blue.amplitude.value, 0.0, 1.0);
  const double rho_r = std::clamp(out.red.amplitude.value, 0.0, 1.0);
  out.thermometry = nbar_from_sidebands(rho_r, rho_b, out.red.amplitude.sigma, out.blue.amplitude.sigma);
  return out;
}

}  // namespace ioncool
