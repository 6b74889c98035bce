#include "ioncool/sequence.hpp"

#include <cmath>
#include <string>

#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"
#include "ioncool/io.hpp"
#include "ioncool/rng.hpp"

namespace ioncool {

namespace {

constexpr double kZeroCrossingThreshold = 1e-3;
constexpr double kNoiselessSigma = 1e-3;

double hz(double angular) { return angular / constants::two_pi; }

}  // namespace

void SbcSchedule::validate() const {
  if (repeats < 0) throw PreconditionError("SbcSchedule: repeats must be >= 0");
  for (const auto* set : {&second_order, &first_order}) {
    if (set->count < 0) throw PreconditionError("SbcSchedule: pulse counts must be >= 0");
  }
}

void ExperimentConfig::validate() const {
  atom.validate();
  trap.validate();
  dissipation.validate();
  detection.validate();
  schedule.validate();
  if (!(raman_omega0 > 0.0) || !std::isfinite(raman_omega0)) {
    throw PreconditionError("ExperimentConfig: raman_omega0 must be > 0");
  }
  if (!(rf_omega > 0.0) || !std::isfinite(rf_omega)) {
    throw PreconditionError("ExperimentConfig: rf_omega must be > 0");
  }
  if (shots_per_point < 1) throw PreconditionError("ExperimentConfig: shots_per_point must be >= 1");
  if (n_max < 1) throw PreconditionError("ExperimentConfig: n_max must be >= 1");
}

double ExperimentConfig::eta() const { return lamb_dicke(atom, trap); }

double ExperimentConfig::repump_block_duration() const {
  const double rf_pi = constants::pi / rf_omega;
  return dissipation.repump_cycles * (dissipation.repump_pulse_duration + rf_pi) +
         dissipation.repump_pulse_duration;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.atom = AtomConfig::mg25();
  cfg.trap.omega_ax = constants::two_pi * 2.0e6;
  cfg.trap.omega_rad = constants::two_pi * 2.3e6;
  cfg.trap.raman_geometry_factor = std::sqrt(2.0);
  cfg.trap.eta_override = 0.28;
  cfg.dissipation.leak_up_rate = 200.0;
  cfg.dissipation.leak_down_rate = 600.0;
  cfg.detection = DetectionModel::defaults();
  cfg.raman_omega0 = constants::two_pi * 40.9e3;
  cfg.rf_omega = constants::two_pi * 63.74e3;
  return cfg;
}

void Sequence::validate() const {
  if (steps.empty()) throw PreconditionError("Sequence: no steps");
  for (const auto& s : steps) s.validate();
}

double Sequence::total_duration() const {
  double t = 0.0;
  for (const auto& s : steps) t += s.duration;
  return t;
}

std::size_t Sequence::count(PulseKind kind) const {
  std::size_t c = 0;
  for (const auto& s : steps) c += s.kind == kind ? 1 : 0;
  return c;
}

Sequence build_sbc_sequence(const ExperimentConfig& cfg, const SbcSchedule& schedule) {
  cfg.validate();
  schedule.validate();
  const double eta = cfg.eta();
  const int sets_orders[2] = {-2, -1};
  const SbcPulseSet sets[2] = {schedule.second_order, schedule.first_order};

  std::vector<PulseSpec> block;
  const PulseSpec repump{PulseKind::Repump, 0, cfg.repump_block_duration(), 0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    const int order = sets_orders[i];
    const auto& set = sets[i];
    if (set.count == 0) continue;
    const int lowest = set.n_start - (set.count - 1);
    if (lowest < -order) {
      throw ScheduleError("SBC schedule: order " + std::to_string(order) + " set from n=" +
                          std::to_string(set.n_start) + " with " + std::to_string(set.count) +
                          " pulses targets n=" + std::to_string(lowest) + ", below " +
                          std::to_string(-order));
    }
    if (set.n_start > cfg.n_max) {
      throw ScheduleError("SBC schedule: n_start=" + std::to_string(set.n_start) +
                          " exceeds n_max=" + std::to_string(cfg.n_max));
    }
    for (int k = 0; k < set.count; ++k) {
      const int n = set.n_start - k;
      const double omega = std::abs(rabi_frequency(n, order, eta, cfg.raman_omega0));
      if (omega < kZeroCrossingThreshold * cfg.raman_omega0) {
        throw ScheduleError("SBC schedule: order " + std::to_string(order) +
                            " Rabi frequency vanishes at n=" + std::to_string(n) +
                            " (zero crossing)");
      }
      block.push_back({PulseKind::Sideband, order, constants::pi / omega, cfg.raman_omega0, 0.0});
      block.push_back(repump);
    }
  }
  if (block.empty() || schedule.repeats == 0) throw ScheduleError("SBC schedule: empty sequence");

  Sequence seq;
  seq.metadata.label = "sbc";
  seq.metadata.seed = cfg.seed;
  for (int r = 0; r < schedule.repeats; ++r) seq.steps.insert(seq.steps.end(), block.begin(), block.end());
  return seq;
}

IonState apply_probe(const IonState& state, const PulseSpec& probe, const ExperimentConfig& cfg) {
  probe.validate();
  IonState out = state;
  switch (probe.kind) {
    case PulseKind::Carrier:
    case PulseKind::Sideband:
    case PulseKind::RF:
      out = apply_coherent_pulse(out, probe, cfg.eta());
      break;
    case PulseKind::RFRecover:
      out = apply_rf_pulse(out, probe);
      break;
    case PulseKind::Repump:
      out = apply_repump(out, cfg.dissipation);
      break;
    case PulseKind::DopplerCool:
      out = apply_doppler_cool(out, cfg.atom, cfg.trap);
      break;
    case PulseKind::RamanIdle:
      break;
  }
  if (probe.raman_illuminated() && probe.duration > 0.0) {
    out = apply_leakage(out, probe.duration, cfg.dissipation).state;
  }
  return out;
}

IonState run_sequence(const IonState& state, const Sequence& seq, const ExperimentConfig& cfg,
                      const StepObserver& observer) {
  if (state.n_max() != cfg.n_max) {
    throw PreconditionError("run_sequence: state n_max " + std::to_string(state.n_max()) +
                            " differs from configured n_max " + std::to_string(cfg.n_max));
  }
  for (const auto& s : seq.steps) s.validate();
  IonState cur = state;
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    cur = apply_probe(cur, seq.steps[i], cfg);
    if (observer) observer(i, seq.steps[i], cur);
  }
  return cur;
}

IonState prepare_state(const ExperimentConfig& cfg) {
  cfg.validate();
  IonState state = apply_doppler_cool(IonState::fock(Level::Down, 0, cfg.n_max), cfg.atom, cfg.trap);
  if (cfg.prepare_with_sbc && cfg.schedule.repeats > 0) {
    state = run_sequence(state, build_sbc_sequence(cfg, cfg.schedule), cfg);
  }
  return state;
}

namespace {

template <class Apply>
ScanData scan_points(const ExperimentConfig& cfg, const IonState& prepared, std::size_t points,
                     int shots, std::uint64_t seed, Apply&& apply) {
  if (shots < 0) throw PreconditionError("scan: shots must be >= 0");
  if (points == 0) throw PreconditionError("scan: no scan points");
  ScanData scan;
  scan.y.resize(points);
  scan.sigma_y.resize(points);
  ReferenceDistributions refs;
  if (shots > 0) refs = reference_distributions(cfg.detection);
  for (std::size_t i = 0; i < points; ++i) {
    const IonState probed = apply(prepared, i);
    const double bright = std::clamp(probed.bright_probability(), 0.0, 1.0);
    if (shots == 0) {
      scan.y[i] = 1.0 - bright;
      scan.sigma_y[i] = kNoiselessSigma;
      continue;
    }
    Rng rng = Rng::stream(seed, i);
    const Histogram hist = simulate_detection(bright, refs, static_cast<std::uint64_t>(shots), rng);
    const PopulationFit fit = fit_population(hist, refs.psi_down, refs.psi_up);
    scan.y[i] = 1.0 - fit.a;
    scan.sigma_y[i] = std::max(fit.sigma, 1e-9);
  }
  return scan;
}

}  // namespace

ScanData scan_frequency(const ExperimentConfig& cfg, const IonState& prepared,
                        const PulseSpec& pulse_template, const std::vector<double>& detunings,
                        int shots, std::uint64_t seed) {
  for (double d : detunings) {
    if (!std::isfinite(d)) throw PreconditionError("scan_frequency: detunings must be finite");
  }
  ScanData scan = scan_points(cfg, prepared, detunings.size(), shots, seed,
                              [&](const IonState& s, std::size_t i) {
                                PulseSpec p = pulse_template;
                                p.detuning = detunings[i];
                                return apply_probe(s, p, cfg);
                              });
  scan.x = detunings;
  return scan;
}

ScanData scan_time(const ExperimentConfig& cfg, const IonState& prepared, const PulseSpec& pulse_template,
                   const std::vector<double>& durations, int shots, std::uint64_t seed) {
  for (double t : durations) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("scan_time: durations must be finite and >= 0");
  }
  ScanData scan = scan_points(cfg, prepared, durations.size(), shots, seed,
                              [&](const IonState& s, std::size_t i) {
                                PulseSpec p = pulse_template;
                                p.duration = durations[i];
                                return apply_probe(s, p, cfg);
                              });
  scan.x = durations;
  return scan;
}

ScanData scan_frequency(const ExperimentConfig& cfg, const PulseSpec& pulse_template,
                        const std::vector<double>& detunings, int shots, std::uint64_t seed) {
  return scan_frequency(cfg, prepare_state(cfg), pulse_template, detunings, shots, seed);
}

ScanData scan_time(const ExperimentConfig& cfg, const PulseSpec& pulse_template,
                   const std::vector<double>& durations, int shots, std::uint64_t seed) {
  return scan_time(cfg, prepare_state(cfg), pulse_template, durations, shots, seed);
}

std::string sequence_to_text(const Sequence& seq) {
  std::string out;
  out += "# label: " + seq.metadata.label + "\n";
  out += "# seed: " + std::to_string(seq.metadata.seed) + "\n";
  out += "# config_hash: " + seq.metadata.config_hash + "\n";
  out += "kind,order,duration_us,detuning_Hz,omega0_Hz\n";
  for (const auto& s : seq.steps) {
    out += std::string(to_string(s.kind)) + ',' + std::to_string(s.order) + ',' +
           io::format_double(s.duration * 1e6) + ',' + io::format_double(hz(s.detuning)) + ',' +
           io::format_double(hz(s.omega0)) + '\n';
  }
  return out;
}

Sequence sequence_from_text(std::string_view text) {
  Sequence seq;
  int line_no = 0;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string where = "sequence line " + std::to_string(line_no) + ": ";
    if (line.empty()) continue;
    if (line.front() == '#') {
      line = trim(line.substr(1));
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) continue;
      const auto key = trim(line.substr(0, colon));
      const auto value = trim(line.substr(colon + 1));
      if (key == "label") seq.metadata.label = std::string(value);
      else if (key == "seed") seq.metadata.seed = static_cast<std::uint64_t>(io::parse_integer(value));
      else if (key == "config_hash") seq.metadata.config_hash = std::string(value);
      continue;
    }
    if (line.starts_with("kind,")) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    if (cells.size() != 5) throw PreconditionError(where + "expected 5 fields");
    try {
      PulseSpec s;
      s.kind = pulse_kind_from_string(cells[0]);
      s.order = static_cast<int>(io::parse_integer(cells[1]));
      s.duration = io::parse_double(cells[2]) / 1e6;
      s.detuning = io::parse_double(cells[3]) * constants::two_pi;
      s.omega0 = io::parse_double(cells[4]) * constants::two_pi;
      s.validate();
      seq.steps.push_back(s);
    } catch (const PreconditionError& e) {
      throw PreconditionError(where + e.what());
    }
  }
  seq.validate();
  return seq;
}

}  // namespace ioncool
