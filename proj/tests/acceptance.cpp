// Acceptance checks. Prints one PASS/FAIL line per criterion; with an
// argument N only criterion N runs and the exit status reflects it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "ioncool/analysis.hpp"
#include "ioncool/constants.hpp"
#include "ioncool/detection.hpp"
#include "ioncool/error.hpp"
#include "ioncool/io.hpp"
#include "ioncool/modchain.hpp"
#include "ioncool/motional.hpp"
#include "ioncool/rng.hpp"
#include "ioncool/sequence.hpp"

using namespace ioncool;
using constants::two_pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

Outcome doppler_baseline() {
  const auto d = doppler_limit_nbar(AtomConfig::mg25(), two_pi * 2e6);
  const bool ok = std::abs(d.temperature - 0.99e-3) <= 0.02e-3 && std::abs(d.nbar - 9.9) <= 0.3;
  return {ok, fmt("T=%.4f mK", d.temperature * 1e3) + fmt(" nbar=%.3f", d.nbar)};
}

SidebandThermometry thermometry(const ExperimentConfig& cfg, const IonState& prepared, int shots,
                                std::uint64_t seed) {
  const auto det = linspace(-two_pi * 60e3, two_pi * 60e3, 41);
  const PulseSpec rsb{PulseKind::Sideband, -1, 45e-6, cfg.raman_omega0, 0.0};
  PulseSpec bsb = rsb;
  bsb.order = +1;
  const auto red = scan_frequency(cfg, prepared, rsb, det, shots, splitmix64(seed));
  const auto blue = scan_frequency(cfg, prepared, bsb, det, shots, splitmix64(seed + 1));
  return analyze_sideband_pair(red, blue).thermometry;
}

Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = ExperimentConfig::defaults();
  const auto cooled = prepare_state(cfg);
  const double nbar = cooled.mean_n();
  const auto th = thermometry(cfg, cooled, 300, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = nbar <= 0.05 && th.nbar >= 0.0 && th.nbar <= 0.08 && secs < 60.0;
  return {ok, fmt("nbar_final=%.5f", nbar) + fmt(" thermometry=%.4f", th.nbar) +
                  fmt("+-%.4f", th.sigma_nbar) + fmt(" runtime=%.2fs", secs)};
}

Outcome thermometry_identity() {
  auto cfg = ExperimentConfig::defaults();
  bool ok = true;
  std::string detail;
  for (double nbar : {0.05, 0.5, 2.0}) {
    const auto state = IonState::product(Level::Down, thermal_distribution(nbar, cfg.n_max));
    const auto th = thermometry(cfg, state, 0, 0);
    const double rel = std::abs(th.nbar - nbar) / nbar;
    ok = ok && rel <= 0.10;
    detail += fmt(" %.2f->", nbar) + fmt("%.4f", th.nbar);
  }
  return {ok, "injected->recovered" + detail};
}

Outcome modulation_chain() {
  const double ratio = sideband_powers(0.58, 5).carrier_to_first_ratio();
  const auto uv = shg_transform({5.36e14, 0.58, 9.2e9});
  const double first = sideband_powers(uv.beta, 5).at(1);
  const double f = solve_chain(raman_difference_chain(450e6), 1.789e9);
  const bool ok = std::abs(ratio - 10.9) <= 0.2 && std::abs(first - 0.238) <= 0.005 && f == 222.25e6;
  return {ok, fmt("ratio=%.3f", ratio) + fmt(" uv_first=%.5f", first) + fmt(" double_pass=%.6f MHz", f / 1e6)};
}

Outcome rf_coverage() {
  const auto refs = reference_distributions(DetectionModel::defaults());
  const double w = two_pi * 63.74e3, c = 0.978;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScanData s;
    for (int i = 0; i < 41; ++i) {
      const double t = i * 1e-6;
      const double y = 0.5 * c * (1.0 - std::cos(w * t));
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
      const auto h = simulate_detection(1.0 - y, refs, 300, rng);
      const auto fit = fit_population(h, refs.psi_down, refs.psi_up);
      s.x.push_back(t);
      s.y.push_back(1.0 - fit.a);
      s.sigma_y.push_back(std::max(fit.sigma, 1e-9));
    }
    const auto r = fit_rabi_sinusoid(s);
    if (std::abs(r.omega.value - w) <= 3 * r.omega.sigma && std::abs(r.contrast.value - c) <= 3 * r.contrast.sigma) {
      ++hits;
    }
  }
  return {hits >= 95, std::to_string(hits) + "/100 seeds cover both"};
}

Outcome carrier_flops() {
  const auto cfg = ExperimentConfig::defaults();
  const PulseSpec carrier{PulseKind::Carrier, 0, 0.0, cfg.raman_omega0, 0.0};

  const auto hot = IonState::product(Level::Down, thermal_distribution(10.0, cfg.n_max));
  const auto flop = scan_time(cfg, hot, carrier, linspace(15e-6, 40e-6, 101), 0, 0);
  double lo = 1.0, hi = 0.0, t_hi = 0.0;
  for (std::size_t i = 0; i < flop.y.size(); ++i) {
    lo = std::min(lo, flop.y[i]);
    if (flop.y[i] > hi) {
      hi = flop.y[i];
      t_hi = flop.x[i];
    }
  }
  const bool collapse = lo >= 0.4 && hi <= 0.6;

  const auto cold = prepare_state(cfg);
  const auto scan = scan_time(cfg, cold, carrier, linspace(0.0, 100e-6, 101), 300, 2);
  const auto fit = fit_decaying_sinusoid(scan);
  const double expect = std::exp(-0.5 * 0.28 * 0.28) * cfg.raman_omega0;
  const double rel = std::abs(fit.omega.value - expect) / expect;
  const bool sbc = fit.report.converged && rel <= 0.02;
  return {collapse && sbc, fmt("doppler flop in [%.4f,", lo) + fmt(" %.4f]", hi) + fmt(" (max at %.2f us)", t_hi * 1e6) +
                               (collapse ? "" : " outside [0.4, 0.6]") + fmt("; sbc flop %.3f kHz", fit.omega.value / two_pi / 1e3) +
                               fmt(" vs %.3f kHz", expect / two_pi / 1e3) + fmt(" (%.2f%%)", rel * 100)};
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string("\"") + IONCOOL_TOOL_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = io::read_file(e.path());
  return files;
}

Outcome properties() {
  std::vector<std::string> failed;
  const auto cfg = ExperimentConfig::defaults();
  const double eta = 0.28;

  {  // normalization under random pulses
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    IonState s = IonState::product(Level::Down, thermal_distribution(3.0, 80));
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const int pick = static_cast<int>(u(gen) * 5);
      const double t = u(gen) * 50e-6, det = (u(gen) - 0.5) * two_pi * 2e5;
      if (pick == 0) s = apply_coherent_pulse(s, {PulseKind::Carrier, 0, t, cfg.raman_omega0, det}, eta);
      if (pick == 1) s = apply_coherent_pulse(s, {PulseKind::Sideband, u(gen) < 0.5 ? -1 : -2, t, cfg.raman_omega0, det}, eta);
      if (pick == 2) s = apply_coherent_pulse(s, {PulseKind::Sideband, u(gen) < 0.5 ? 1 : 2, t, cfg.raman_omega0, det}, eta);
      if (pick == 3) s = apply_rf_pulse(s, {PulseKind::RFRecover, 0, t, cfg.rf_omega, det});
      if (pick == 4) s = apply_leakage(s, t, cfg.dissipation).state;
      worst = std::max(worst, std::abs(s.total() - 1.0));
    }
    if (worst > 1e-9) failed.push_back("normalization");
  }
  {  // |down,0> is dark to every red sideband
    const auto g = IonState::fock(Level::Down, 0, 40);
    for (int order : {-1, -2}) {
      for (double t : {1e-6, 13e-6, 200e-6}) {
        if (!(apply_coherent_pulse(g, {PulseKind::Sideband, order, t, cfg.raman_omega0, 0.0}, eta) == g)) {
          failed.push_back("dark state");
        }
      }
    }
  }
  {  // one quantum removed per pulse + repump
    auto c = cfg;
    c.dissipation.leak_up_rate = c.dissipation.leak_down_rate = 0.0;
    double worst = 0.0;
    for (int n = 1; n <= 46; ++n) {
      const auto seq = build_sbc_sequence(c, {{0, 0}, {1, n}, 1});
      const auto out = run_sequence(IonState::fock(Level::Down, n, c.n_max), seq, c);
      worst = std::max(worst, std::abs(out.motional()[static_cast<std::size_t>(n - 1)] - 1.0));
    }
    if (worst > 1e-12) failed.push_back("one-quantum removal");
  }
  {  // modulation index inversion
    for (double beta = 0.05; beta <= 1.0 + 1e-12; beta += 0.05) {
      const auto j = bessel_j_orders(1, beta);
      if (std::abs(beta_from_ratio(j[0] * j[0] / (j[1] * j[1])) - beta) > 1e-8) failed.push_back("beta round trip");
    }
  }
  {  // Laguerre recurrence against the explicit sum
    double worst = 0.0;
    for (int alpha : {0, 1, 2}) {
      for (int n : {0, 1, 5, 20, 60}) {
        for (double x : {0.0784, 0.5, 2.0}) {
          long double sum = 0;
          for (int k = 0; k <= n; ++k) {
            long double b = 1;  // C(n+alpha, n-k)
            for (int i = 1; i <= n - k; ++i) b = b * (k + alpha + i) / i;
            long double term = b;
            for (int i = 1; i <= k; ++i) term = term * -x / i;
            sum += term;
          }
          worst = std::max(worst, static_cast<double>(std::abs(laguerre(n, alpha, x) - sum) /
                                                      std::max<long double>(1.0L, std::abs(sum))));
        }
      }
    }
    if (worst > 1e-9) failed.push_back("laguerre");
  }
  {  // deterministic replay of the CLI
    const auto base = fs::temp_directory_path() / "ioncool_acceptance_replay";
    fs::remove_all(base);
    for (const std::string args : {"cool --seed 11", "scan --observable bsb --seed 11", "scan --observable carrier --axis time --seed 11", "modchain"}) {
      const auto dir = base / "run";
      fs::remove_all(dir);
      if (run_tool(args + " --out \"" + dir.string() + "\"") != 0) {
        failed.push_back("replay exit: " + args);
        continue;
      }
      const auto first = read_dir(dir);
      if (run_tool(args + " --out \"" + dir.string() + "\"") != 0 || read_dir(dir) != first) {
        failed.push_back("replay: " + args);
      }
    }
    fs::remove_all(base);
  }
  std::string detail = failed.empty() ? "all property checks and CLI replay hold" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Doppler baseline", doppler_baseline},
      {"end-to-end cooling and thermometry", end_to_end},
      {"thermometry identity", thermometry_identity},
      {"modulation chain", modulation_chain},
      {"RF flop coverage", rf_coverage},
      {"carrier flops", carrier_flops},
      {"property suites", properties},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria.size());
      return 2;
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
