#include "ioncool/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ioncool/error.hpp"
#include "ioncool/kernels.hpp"

namespace ioncool {

namespace {

constexpr double kNormTolerance = 1e-9;

std::vector<double> zeros(int n_max) {
  return std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0);
}

// Optical pump of the up population: branch to down, the rest to aux, with
// optional n -> n+1 recoil.
void optical_pump(std::span<double> down, std::span<double> up, std::span<double> aux,
                  double branch, double heating) {
  const std::size_t top = up.size() - 1;
  for (std::size_t n = 0; n <= top; ++n) {
    const double moved = up[n];
    if (moved == 0.0) continue;
    up[n] = 0.0;
    const double to_down = moved * branch;
    const double to_aux = moved - to_down;
    const std::size_t dest = std::min(n + 1, top);
    down[n] += to_down * (1.0 - heating);
    down[dest] += to_down * heating;
    aux[n] += to_aux * (1.0 - heating);
    aux[dest] += to_aux * heating;
  }
}

}  // namespace

IonState IonState::fock(Level level, int n, int n_max) {
  if (n_max < 0 || n < 0 || n > n_max) {
    throw PreconditionError("IonState::fock: need 0 <= n <= n_max");
  }
  std::array<std::vector<double>, 3> pop{zeros(n_max), zeros(n_max), zeros(n_max)};
  pop[index(level)][static_cast<std::size_t>(n)] = 1.0;
  return IonState(std::move(pop));
}

IonState IonState::product(Level level, const MotionalDistribution& motion) {
  const int n_max = motion.n_max();
  std::array<std::vector<double>, 3> pop{zeros(n_max), zeros(n_max), zeros(n_max)};
  std::ranges::copy(motion.populations(), pop[index(level)].begin());
  return IonState(std::move(pop));
}

IonState IonState::from_populations(std::array<std::vector<double>, 3> pop) {
  const std::size_t size = pop[0].size();
  if (size == 0 || pop[1].size() != size || pop[2].size() != size) {
    throw PreconditionError("IonState: level vectors must be non-empty and equal length");
  }
  for (const auto& lv : pop) {
    for (double p : lv) {
      if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("IonState: entry outside [0,1]");
    }
  }
  IonState s(std::move(pop));
  s.require_normalized("IonState::from_populations");
  return s;
}

double IonState::total() const {
  double t = 0.0;
  for (const auto& lv : pop_) {
    for (double p : lv) t += p;
  }
  return t;
}

double IonState::level_population(Level l) const {
  double t = 0.0;
  for (double p : pop_[index(l)]) t += p;
  return t;
}

std::vector<double> IonState::motional() const {
  std::vector<double> m(pop_[0].size(), 0.0);
  for (const auto& lv : pop_) {
    for (std::size_t n = 0; n < m.size(); ++n) m[n] += lv[n];
  }
  return m;
}

double IonState::mean_n() const {
  const auto m = motional();
  double acc = 0.0;
  for (std::size_t n = 0; n < m.size(); ++n) acc += static_cast<double>(n) * m[n];
  return acc;
}

double IonState::bright_probability() const {
  return level_population(Level::Down) + level_population(Level::Aux);
}

void IonState::require_normalized(std::string_view op) const {
  const double t = total();
  if (!(std::abs(t - 1.0) <= kNormTolerance)) {
    throw PreconditionError(std::string(op) + ": state not normalized (total = " +
                            std::to_string(t) + ")");
  }
}

std::string_view to_string(PulseKind kind) {
  switch (kind) {
    case PulseKind::Carrier: return "carrier";
    case PulseKind::Sideband: return "sideband";
    case PulseKind::RF: return "rf";
    case PulseKind::RFRecover: return "rf_recover";
    case PulseKind::Repump: return "repump";
    case PulseKind::DopplerCool: return "doppler_cool";
    case PulseKind::RamanIdle: return "raman_idle";
  }
  return "?";
}

PulseKind pulse_kind_from_string(std::string_view name) {
  for (PulseKind k : {PulseKind::Carrier, PulseKind::Sideband, PulseKind::RF,
                      PulseKind::RFRecover, PulseKind::Repump, PulseKind::DopplerCool,
                      PulseKind::RamanIdle}) {
    if (to_string(k) == name) return k;
  }
  throw PreconditionError("unknown pulse kind '" + std::string(name) + "'");
}

void PulseSpec::validate() const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw PreconditionError("PulseSpec: duration must be finite and >= 0");
  }
  if (!std::isfinite(omega0) || !std::isfinite(detuning)) {
    throw PreconditionError("PulseSpec: omega0 and detuning must be finite");
  }
  if (kind == PulseKind::Sideband) {
    if (order == 0 || order < -2 || order > 2) {
      throw PreconditionError("PulseSpec: sideband order must be one of -2, -1, +1, +2");
    }
  } else if (order != 0) {
    throw PreconditionError("PulseSpec: order is only meaningful for sideband pulses");
  }
}

bool PulseSpec::raman_illuminated() const {
  return kind == PulseKind::Carrier || kind == PulseKind::Sideband ||
         kind == PulseKind::RamanIdle;
}

void DissipationConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(repump_down_branch) || !prob(recoil_heating_per_photon)) {
    throw PreconditionError("DissipationConfig: probabilities must lie in [0,1]");
  }
  if (repump_cycles < 1) throw PreconditionError("DissipationConfig: repump_cycles must be >= 1");
  if (!(repump_pulse_duration >= 0.0)) {
    throw PreconditionError("DissipationConfig: repump_pulse_duration must be >= 0");
  }
  if (!(leak_up_rate >= 0.0) || !(leak_down_rate >= 0.0) || !std::isfinite(leak_up_rate) ||
      !std::isfinite(leak_down_rate)) {
    throw PreconditionError("DissipationConfig: leak rates must be finite and >= 0");
  }
}

IonState apply_coherent_pulse(const IonState& state, const PulseSpec& pulse, double eta) {
  pulse.validate();
  if (pulse.kind != PulseKind::Carrier && pulse.kind != PulseKind::Sideband &&
      pulse.kind != PulseKind::RF) {
    throw PreconditionError("apply_coherent_pulse: pulse kind '" +
                            std::string(to_string(pulse.kind)) + "' is not coherent");
  }
  if (pulse.kind == PulseKind::RF) return apply_rf_pulse(state, pulse);
  state.require_normalized("apply_coherent_pulse");

  IonState out = state;
  const int n_max = state.n_max();
  const int s = pulse.motional_shift();
  const int n_lo = std::max(0, -s);
  const int n_hi = std::min(n_max, n_max - s);
  if (n_lo > n_hi || pulse.duration == 0.0) return out;

  const auto count = static_cast<std::size_t>(n_hi - n_lo + 1);
  std::vector<double> omega(count);
  for (std::size_t i = 0; i < count; ++i) {
    omega[i] = rabi_frequency(n_lo + static_cast<int>(i), s, eta, pulse.omega0);
  }
  auto down = out.level(Level::Down).subspan(static_cast<std::size_t>(n_lo), count);
  auto up = out.level(Level::Up).subspan(static_cast<std::size_t>(n_lo + s), count);
  kernels::two_level_exchange(down, up, omega, pulse.detuning, pulse.duration);
  return out;
}

IonState apply_rf_pulse(const IonState& state, const PulseSpec& pulse) {
  pulse.validate();
  if (pulse.kind != PulseKind::RF && pulse.kind != PulseKind::RFRecover) {
    throw PreconditionError("apply_rf_pulse: pulse kind must be rf or rf_recover");
  }
  state.require_normalized("apply_rf_pulse");
  IonState out = state;
  if (pulse.duration == 0.0) return out;
  const Level lower = pulse.kind == PulseKind::RF ? Level::Down : Level::Aux;
  const std::vector<double> omega(static_cast<std::size_t>(state.n_max()) + 1, pulse.omega0);
  kernels::two_level_exchange(out.level(lower), out.level(Level::Up), omega,
                              pulse.detuning, pulse.duration);
  return out;
}

IonState apply_repump(const IonState& state, const DissipationConfig& cfg) {
  cfg.validate();
  state.require_normalized("apply_repump");
  IonState out = state;
  auto down = out.level(Level::Down);
  auto up = out.level(Level::Up);
  auto aux = out.level(Level::Aux);
  for (int c = 0; c < cfg.repump_cycles; ++c) {
    optical_pump(down, up, aux, cfg.repump_down_branch, cfg.recoil_heating_per_photon);
    // Perfect RF_recover pi-pulse; up is empty here so this moves aux -> up.
    std::swap_ranges(aux.begin(), aux.end(), up.begin());
  }
  optical_pump(down, up, aux, cfg.repump_down_branch, cfg.recoil_heating_per_photon);
  return out;
}

IonState apply_doppler_cool(const IonState& state, const AtomConfig& atom,
                            const TrapConfig& trap) {
  trap.validate();
  const DopplerLimit limit = doppler_limit_nbar(atom, trap.omega_ax);
  return IonState::product(Level::Down, thermal_distribution(limit.nbar, state.n_max()));
}

LeakageResult apply_leakage(const IonState& state, double duration,
                            const DissipationConfig& cfg) {
  cfg.validate();
  if (!(duration >= 0.0)) throw PreconditionError("apply_leakage: duration must be >= 0");
  state.require_normalized("apply_leakage");
  LeakageResult res{state, false};
  double p_up = cfg.leak_up_rate * duration;
  double p_down = cfg.leak_down_rate * duration;
  if (p_up > 1.0 || p_down > 1.0) res.clamped = true;
  p_up = std::clamp(p_up, 0.0, 1.0);
  p_down = std::clamp(p_down, 0.0, 1.0);
  if (p_up == 0.0 && p_down == 0.0) return res;
  auto down = res.state.level(Level::Down);
  auto up = res.state.level(Level::Up);
  for (std::size_t n = 0; n < down.size(); ++n) {
    const double d = down[n];
    const double u = up[n];
    const double flow = p_up * d - p_down * u;
    down[n] = d - flow;
    up[n] = u + flow;
  }
  return res;
}

}  // namespace ioncool
