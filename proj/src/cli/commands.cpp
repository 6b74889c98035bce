#include <cmath>
#include <ostream>
#include <vector>

#include "ioncool/cli.hpp"
#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"
#include "ioncool/io.hpp"
#include "ioncool/kernels.hpp"
#include "ioncool/modchain.hpp"
#include "ioncool/rng.hpp"

namespace ioncool::cli {

namespace {

using io::Json;
namespace fs = std::filesystem;

struct Run {
  RunConfig config;
  std::uint64_t seed = 0;
  int shots = 0;
  std::vector<std::string> outputs;
  fs::path dir;

  void write(const std::string& name, std::string_view content) {
    io::write_file_atomic(dir / name, content);
    outputs.push_back(name);
  }
};

Run start_run(const CommonOptions& opts) {
  Run run;
  run.config = opts.config_path.empty() ? default_config() : load_config(opts.config_path);
  if (opts.config_path.empty()) run.config.origin = "";
  if (opts.seed) run.config.experiment.seed = *opts.seed;
  if (opts.shots) {
    if (*opts.shots < 1) throw ConfigError("--shots must be >= 1");
    run.config.experiment.shots_per_point = *opts.shots;
  }
  run.seed = run.config.experiment.seed;
  run.shots = run.config.experiment.shots_per_point;
  run.dir = opts.out_dir;
  std::error_code ec;
  fs::create_directories(run.dir, ec);
  if (ec || !fs::is_directory(run.dir)) {
    throw ConfigError("cannot create output directory '" + run.dir.string() + "'");
  }
  return run;
}

void finish_run(Run& run, const CommonOptions& opts, std::string_view subcommand) {
  Json m;
  m["tool"] = "ioncool";
  m["version"] = std::string(tool_version());
  m["subcommand"] = std::string(subcommand);
  m["config_path"] = opts.config_path.string();
  m["config_hash"] = run.config.hash();
  m["seed"] = run.seed;
  m["shots"] = run.shots;
  m["out_dir"] = opts.out_dir.string();
  m["kernel_backend"] = std::string(kernels::backend_name(kernels::active_backend()));
  m["outputs"] = run.outputs;
  io::write_file_atomic(run.dir / "manifest.json", io::dump(m));
}

// Independent generator seed per observable, shared between cool and scan.
std::uint64_t observable_seed(std::uint64_t seed, std::string_view observable) {
  std::uint64_t idx = 0;
  if (observable == "bsb") idx = 1;
  else if (observable == "carrier") idx = 2;
  else if (observable == "rf") idx = 3;
  return splitmix64(seed + idx);
}

PulseSpec probe_for(std::string_view observable, const ExperimentConfig& cfg) {
  if (observable == "rsb") return {PulseKind::Sideband, -1, 0.0, cfg.raman_omega0, 0.0};
  if (observable == "bsb") return {PulseKind::Sideband, +1, 0.0, cfg.raman_omega0, 0.0};
  if (observable == "carrier") return {PulseKind::Carrier, 0, 0.0, cfg.raman_omega0, 0.0};
  if (observable == "rf") return {PulseKind::RF, 0, 0.0, cfg.rf_omega, 0.0};
  throw ConfigError("unknown observable '" + std::string(observable) + "' (rsb, bsb, carrier, rf)");
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

std::string scan_csv(const ScanData& scan, bool frequency_axis) {
  ScanData shown = scan;
  for (double& x : shown.x) x = frequency_axis ? x / constants::two_pi : x * 1e6;
  return io::scan_to_csv(shown, frequency_axis ? "detuning_hz" : "time_us");
}

Json gaussian_json(const GaussianFit& fit) {
  Json j;
  j["model"] = "gaussian";
  j["x_units"] = "rad/s";
  j["fit"] = io::fit_report_to_json(fit.report);
  j["center_hz"] = fit.center.value / constants::two_pi;
  j["width_hz"] = fit.width.value / constants::two_pi;
  return j;
}

struct Thermometry {
  ScanData red, blue;
  std::optional<SidebandPairAnalysis> pair;
  std::string error;
};

Thermometry run_thermometry(const Run& run, const IonState& prepared) {
  const auto& cfg = run.config.experiment;
  const auto& th = run.config.thermometry;
  const auto detunings = linspace(-th.span, th.span, th.points);
  Thermometry t;
  PulseSpec red = probe_for("rsb", cfg), blue = probe_for("bsb", cfg);
  red.duration = blue.duration = th.probe_duration;
  t.red = scan_frequency(cfg, prepared, red, detunings, run.shots, observable_seed(run.seed, "rsb"));
  t.blue = scan_frequency(cfg, prepared, blue, detunings, run.shots, observable_seed(run.seed, "bsb"));
  try {
    t.pair = analyze_sideband_pair(t.red, t.blue);
  } catch (const FitError& e) {
    t.error = e.what();
  }
  return t;
}

Json thermometry_json(const Run& run, const Thermometry& t) {
  Json j;
  j["probe_us"] = run.config.thermometry.probe_duration * 1e6;
  j["shots"] = run.shots;
  j["points"] = run.config.thermometry.points;
  if (!t.pair) {
    j["error"] = t.error;
    return j;
  }
  j["result"] = io::thermometry_to_json(t.pair->thermometry);
  j["red"] = gaussian_json(t.pair->red);
  j["blue"] = gaussian_json(t.pair->blue);
  return j;
}

bool thermometry_ok(const Thermometry& t) {
  return t.pair && t.pair->red.report.converged && t.pair->blue.report.converged;
}

}  // namespace

int cmd_cool(const CommonOptions& opts, std::ostream& log) {
  Run run = start_run(opts);
  const ExperimentConfig& cfg = run.config.experiment;

  const DopplerLimit doppler = doppler_limit_nbar(cfg.atom, cfg.trap.omega_ax);
  const IonState start = apply_doppler_cool(IonState::fock(Level::Down, 0, cfg.n_max), cfg.atom, cfg.trap);

  std::string trace = "step,kind,order,time_us,nbar,p_up\n";
  auto trace_row = [&](std::size_t step, std::string_view kind, int order, double t, const IonState& s) {
    trace += std::to_string(step) + ',' + std::string(kind) + ',' + std::to_string(order) + ',' +
             io::format_double(t * 1e6) + ',' + io::format_double(s.mean_n()) + ',' +
             io::format_double(s.level_population(Level::Up)) + '\n';
  };
  trace_row(0, "doppler_cool", 0, 0.0, start);

  IonState final_state = start;
  Sequence seq;
  if (cfg.schedule.repeats > 0) {
    seq = build_sbc_sequence(cfg, cfg.schedule);
    seq.metadata.config_hash = run.config.hash();
    double elapsed = 0.0;
    final_state = run_sequence(start, seq, cfg, [&](std::size_t i, const PulseSpec& p, const IonState& s) {
      elapsed += p.duration;
      trace_row(i + 1, to_string(p.kind), p.order, elapsed, s);
    });
  }

  std::vector<double> n(static_cast<std::size_t>(cfg.n_max) + 1);
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = static_cast<double>(i);
  const auto lvl = [&](Level l) {
    const auto s = final_state.level(l);
    return std::vector<double>(s.begin(), s.end());
  };
  run.write("final_state.csv", io::csv_columns({"n", "p_down", "p_up", "p_aux"},
                                               {n, lvl(Level::Down), lvl(Level::Up), lvl(Level::Aux)}));
  run.write("nbar_trace.csv", trace);
  if (!seq.steps.empty()) run.write("sequence.txt", sequence_to_text(seq));

  const Thermometry th = run_thermometry(run, final_state);
  run.write("thermometry_rsb.csv", scan_csv(th.red, true));
  run.write("thermometry_bsb.csv", scan_csv(th.blue, true));

  const auto motion = final_state.motional();
  Json s;
  s["eta"] = cfg.eta();
  s["doppler_temperature_k"] = doppler.temperature;
  s["nbar_doppler"] = start.mean_n();
  s["nbar_final"] = final_state.mean_n();
  s["p0_final"] = motion[0];
  s["p_up_final"] = final_state.level_population(Level::Up);
  s["sequence"] = Json{{"steps", seq.steps.size()},
                       {"sideband_pulses", seq.count(PulseKind::Sideband)},
                       {"repump_blocks", seq.count(PulseKind::Repump)},
                       {"duration_ms", seq.total_duration() * 1e3}};
  s["thermometry"] = thermometry_json(run, th);
  run.write("summary.json", io::dump(s));
  finish_run(run, opts, "cool");

  log << "nbar_final " << io::format_double(final_state.mean_n()) << '\n';
  if (th.pair) log << "thermometry nbar " << io::format_double(th.pair->thermometry.nbar) << '\n';
  // Ratio thermometry is ill-conditioned near Q = 1 (hot ions); the cooling
  // run itself still succeeded, so this is only reported.
  if (!thermometry_ok(th)) {
    log << "warning: thermometry unavailable: " << (th.pair ? "fit did not converge" : th.error) << '\n';
  }
  return kExitOk;
}

int cmd_scan(const CommonOptions& opts, const ScanOptions& so, std::ostream& log) {
  if (so.axis != "frequency" && so.axis != "time") {
    throw ConfigError("unknown axis '" + so.axis + "' (frequency, time)");
  }
  Run run = start_run(opts);
  ExperimentConfig& cfg = run.config.experiment;
  if (so.prepare) {
    if (*so.prepare == "sbc") cfg.prepare_with_sbc = true;
    else if (*so.prepare == "doppler") cfg.prepare_with_sbc = false;
    else throw ConfigError("unknown --prepare '" + *so.prepare + "' (doppler, sbc)");
  }
  const bool freq = so.axis == "frequency";
  PulseSpec probe = probe_for(so.observable, cfg);

  double start, stop;
  int points;
  if (freq) {
    const double span_hz = run.config.thermometry.span / constants::two_pi;
    start = so.start.value_or(-span_hz);
    stop = so.stop.value_or(span_hz);
    points = so.points.value_or(run.config.thermometry.points);
  } else {
    const double stop_us = so.observable == "rf" ? 40.0 : so.observable == "carrier" ? 100.0 : 200.0;
    start = so.start.value_or(0.0);
    stop = so.stop.value_or(stop_us);
    points = so.points.value_or(so.observable == "rf" ? 41 : 101);
  }
  if (points < 2 || !(stop > start) || !std::isfinite(start) || !std::isfinite(stop)) {
    throw ConfigError("empty scan range: need --stop > --start and --points >= 2");
  }
  if (!freq && start < 0.0) throw ConfigError("time scans need --start >= 0");

  if (freq) {
    double probe_s;
    if (so.probe_us) {
      probe_s = *so.probe_us / 1e6;
    } else if (so.observable == "rsb" || so.observable == "bsb") {
      probe_s = run.config.thermometry.probe_duration;
    } else if (so.observable == "carrier") {
      probe_s = constants::pi / std::abs(rabi_frequency(0, 0, cfg.eta(), cfg.raman_omega0));
    } else {
      probe_s = constants::pi / cfg.rf_omega;
    }
    if (!(probe_s >= 0.0)) throw ConfigError("--probe-us must be >= 0");
    probe.duration = probe_s;
  }

  const IonState prepared = prepare_state(cfg);
  std::vector<double> axis = linspace(start, stop, points);
  for (double& x : axis) x = freq ? x * constants::two_pi : x / 1e6;
  const std::uint64_t seed = observable_seed(run.seed, so.observable);
  const ScanData scan = freq ? scan_frequency(cfg, prepared, probe, axis, run.shots, seed)
                             : scan_time(cfg, prepared, probe, axis, run.shots, seed);
  const std::string stem = so.observable + "_" + so.axis;
  run.write(stem + ".csv", scan_csv(scan, freq));

  Json fit;
  fit["observable"] = so.observable;
  fit["axis"] = so.axis;
  bool converged = true;
  int code = kExitOk;
  try {
    if (freq) {
      const auto g = fit_gaussian_resonance(scan);
      fit.update(gaussian_json(g));
      converged = g.report.converged;
    } else {
      fit["x_units"] = "s";
      if (so.observable == "rf") {
        const auto r = fit_rabi_sinusoid(scan);
        fit["model"] = "sinusoid";
        fit["fit"] = io::fit_report_to_json(r.report);
        fit["omega_hz"] = r.omega.value / constants::two_pi;
        converged = r.report.converged;
      } else if (so.observable == "carrier" && !cfg.prepare_with_sbc) {
        const auto r = fit_thermal_flop(scan, cfg.eta());
        fit["model"] = "thermal_flop";
        fit["fit"] = io::fit_report_to_json(r.report);
        fit["flat_likelihood"] = r.flat_likelihood;
        converged = r.report.converged;
      } else {
        const auto r = fit_decaying_sinusoid(scan);
        fit["model"] = "decaying_sinusoid";
        fit["fit"] = io::fit_report_to_json(r.report);
        fit["omega_hz"] = r.omega.value / constants::two_pi;
        converged = r.report.converged;
      }
    }
  } catch (const FitError& e) {
    fit["error"] = e.what();
    converged = false;
  }
  run.write(stem + "_fit.json", io::dump(fit));
  if (!converged) code = kExitFit;

  if (freq && (so.observable == "rsb" || so.observable == "bsb")) {
    const std::string partner = so.observable == "rsb" ? "bsb" : "rsb";
    PulseSpec other = probe_for(partner, cfg);
    other.duration = probe.duration;
    const ScanData pscan = scan_frequency(cfg, prepared, other, axis, run.shots, observable_seed(run.seed, partner));
    run.write(partner + "_frequency.csv", scan_csv(pscan, true));
    Thermometry t;
    t.red = so.observable == "rsb" ? scan : pscan;
    t.blue = so.observable == "rsb" ? pscan : scan;
    try {
      t.pair = analyze_sideband_pair(t.red, t.blue);
    } catch (const FitError& e) {
      t.error = e.what();
    }
    Json tj = thermometry_json(run, t);
    tj["probe_us"] = probe.duration * 1e6;
    tj["points"] = points;
    run.write("thermometry.json", io::dump(tj));
    if (t.pair) log << "thermometry nbar " << io::format_double(t.pair->thermometry.nbar) << '\n';
    else log << "thermometry failed: " << t.error << '\n';
    if (!thermometry_ok(t)) code = kExitFit;
  }
  finish_run(run, opts, "scan");
  if (code != kExitOk) log << "fit did not converge\n";
  return code;
}

int cmd_modchain(const CommonOptions& opts, std::ostream& out) {
  Run run = start_run(opts);
  const ModchainSettings& mc = run.config.modchain;
  const double beta = mc.carrier_to_sideband_ratio ? beta_from_ratio(*mc.carrier_to_sideband_ratio) : mc.beta;

  const ModulationState green{constants::speed_of_light / (0.5 * mc.fundamental_wavelength), beta, mc.mod_frequency};
  green.validate();
  const ModulationState uv = shg_transform(green);

  std::string table = "stage,order,frequency_offset_hz,power_fraction\n";
  Json stages = Json::array();
  for (const auto& [name, state] : {std::pair{"green", green}, std::pair{"uv", uv}}) {
    const SidebandSpectrum spec = sideband_powers(state.beta, mc.max_order);
    for (int k = -mc.max_order; k <= mc.max_order; ++k) {
      table += std::string(name) + ',' + std::to_string(k) + ',' + io::format_double(k * state.mod_frequency) +
               ',' + io::format_double(spec.at(k)) + '\n';
    }
    stages.push_back(Json{{"stage", name},
                          {"carrier_frequency_hz", state.carrier_frequency},
                          {"beta", state.beta},
                          {"mod_frequency_hz", state.mod_frequency},
                          {"carrier_to_first_ratio", spec.carrier_to_first_ratio()},
                          {"first_order_fraction", spec.at(1)},
                          {"truncation_remainder", spec.remainder}});
  }

  AomChain chain = raman_difference_chain(mc.single_pass_frequency);
  const double f = solve_chain(chain, mc.target_difference);
  for (auto& s : chain.stages) {
    if (!s.frequency) s.frequency = f;
  }
  std::string aom = "stage,passes,sign,frequency_hz\n";
  for (const auto& s : chain.stages) {
    aom += s.label + ',' + std::to_string(s.passes) + ',' + std::to_string(s.sign) + ',' +
           io::format_double(*s.frequency) + '\n';
  }

  Json j;
  j["stages"] = stages;
  j["aom"] = Json{{"single_pass_frequency_hz", mc.single_pass_frequency},
                  {"target_difference_hz", mc.target_difference},
                  {"double_pass_frequency_hz", f},
                  {"net_shift_hz", net_shift(chain)},
                  {"single_pass_efficiency", mc.single_pass_efficiency},
                  {"double_pass_efficiency", mc.double_pass_efficiency}};
  run.write("sidebands.csv", table);
  run.write("aom.csv", aom);
  run.write("modchain.json", io::dump(j));
  finish_run(run, opts, "modchain");
  out << table << '\n' << aom;
  return kExitOk;
}

int report_failure(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PreconditionError*>(&e) ||
      dynamic_cast<const TruncationError*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const FitError*>(&e) || dynamic_cast<const ScheduleError*>(&e)) return kExitFit;
  return kExitFailure;
}

}  // namespace ioncool::cli
