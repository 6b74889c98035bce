#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <functional>
#include <map>
#include <sstream>

#include "ioncool/cli.hpp"
#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"
#include "ioncool/io.hpp"

namespace ioncool::cli {

std::string_view tool_version() { return IONCOOL_VERSION; }

std::string RunConfig::hash() const { return io::hex64(io::fnv1a64(text)); }

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

// Extra state that only exists while parsing.
struct Pending {
  std::string depump = "auto";
  double dark_mean_target = 0.2;
  std::string eta = "";
};

double num(std::string_view v) { return io::parse_double(v); }
int integer(std::string_view v) {
  const long long x = io::parse_integer(v);
  if (x < INT32_MIN || x > INT32_MAX) throw PreconditionError("integer out of range");
  return static_cast<int>(x);
}
double hz_to_angular(std::string_view v) { return constants::two_pi * num(v); }

std::map<std::string, Setter> make_fields(Pending& p) {
  std::map<std::string, Setter> f;
  f["atom.mass_amu"] = [](RunConfig& c, std::string_view v) { c.experiment.atom.mass_amu = num(v); };
  f["atom.wavelength_nm"] = [](RunConfig& c, std::string_view v) { c.experiment.atom.transition_wavelength = num(v) / 1e9; };
  f["atom.linewidth_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.atom.linewidth_gamma = hz_to_angular(v); };
  f["atom.hyperfine_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.atom.hyperfine_splitting = num(v); };

  f["trap.axial_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.trap.omega_ax = hz_to_angular(v); };
  f["trap.radial_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.trap.omega_rad = hz_to_angular(v); };
  f["trap.geometry_factor"] = [](RunConfig& c, std::string_view v) { c.experiment.trap.raman_geometry_factor = num(v); };
  f["trap.eta"] = [&p](RunConfig&, std::string_view v) {
    if (v != "auto") (void)num(v);
    p.eta = std::string(v);
  };

  f["motion.n_max"] = [](RunConfig& c, std::string_view v) { c.experiment.n_max = integer(v); };

  f["raman.omega0_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.raman_omega0 = hz_to_angular(v); };
  f["raman.leak_up_rate"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.leak_up_rate = num(v); };
  f["raman.leak_down_rate"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.leak_down_rate = num(v); };

  f["rf.omega_hz"] = [](RunConfig& c, std::string_view v) { c.experiment.rf_omega = hz_to_angular(v); };

  f["repump.down_branch"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.repump_down_branch = num(v); };
  f["repump.cycles"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.repump_cycles = integer(v); };
  f["repump.pulse_us"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.repump_pulse_duration = num(v) / 1e6; };
  f["repump.recoil_heating"] = [](RunConfig& c, std::string_view v) { c.experiment.dissipation.recoil_heating_per_photon = num(v); };

  f["detection.mean_bright"] = [](RunConfig& c, std::string_view v) { c.experiment.detection.mean_bright = num(v); };
  f["detection.mean_dark"] = [](RunConfig& c, std::string_view v) { c.experiment.detection.mean_dark = num(v); };
  f["detection.exposure_us"] = [](RunConfig& c, std::string_view v) { c.experiment.detection.exposure = num(v) / 1e6; };
  f["detection.k_max"] = [](RunConfig& c, std::string_view v) { c.experiment.detection.k_max = integer(v); };
  f["detection.depump_rate"] = [&p](RunConfig&, std::string_view v) {
    if (v != "auto") (void)num(v);
    p.depump = std::string(v);
  };
  f["detection.dark_mean_target"] = [&p](RunConfig&, std::string_view v) { p.dark_mean_target = num(v); };

  f["schedule.second_order_count"] = [](RunConfig& c, std::string_view v) { c.experiment.schedule.second_order.count = integer(v); };
  f["schedule.second_order_n_start"] = [](RunConfig& c, std::string_view v) { c.experiment.schedule.second_order.n_start = integer(v); };
  f["schedule.first_order_count"] = [](RunConfig& c, std::string_view v) { c.experiment.schedule.first_order.count = integer(v); };
  f["schedule.first_order_n_start"] = [](RunConfig& c, std::string_view v) { c.experiment.schedule.first_order.n_start = integer(v); };
  f["schedule.repeats"] = [](RunConfig& c, std::string_view v) { c.experiment.schedule.repeats = integer(v); };

  f["experiment.shots"] = [](RunConfig& c, std::string_view v) { c.experiment.shots_per_point = integer(v); };
  f["experiment.seed"] = [](RunConfig& c, std::string_view v) {
    const long long s = io::parse_integer(v);
    if (s < 0) throw PreconditionError("seed must be >= 0");
    c.experiment.seed = static_cast<std::uint64_t>(s);
  };
  f["experiment.prepare"] = [](RunConfig& c, std::string_view v) {
    if (v == "sbc") c.experiment.prepare_with_sbc = true;
    else if (v == "doppler") c.experiment.prepare_with_sbc = false;
    else throw PreconditionError("expected 'sbc' or 'doppler'");
  };

  f["thermometry.probe_us"] = [](RunConfig& c, std::string_view v) { c.thermometry.probe_duration = num(v) / 1e6; };
  f["thermometry.span_hz"] = [](RunConfig& c, std::string_view v) { c.thermometry.span = hz_to_angular(v); };
  f["thermometry.points"] = [](RunConfig& c, std::string_view v) { c.thermometry.points = integer(v); };

  f["modchain.beta"] = [](RunConfig& c, std::string_view v) { c.modchain.beta = num(v); };
  f["modchain.carrier_to_sideband_ratio"] = [](RunConfig& c, std::string_view v) { c.modchain.carrier_to_sideband_ratio = num(v); };
  f["modchain.mod_frequency_hz"] = [](RunConfig& c, std::string_view v) { c.modchain.mod_frequency = num(v); };
  f["modchain.fundamental_wavelength_nm"] = [](RunConfig& c, std::string_view v) { c.modchain.fundamental_wavelength = num(v) / 1e9; };
  f["modchain.max_order"] = [](RunConfig& c, std::string_view v) { c.modchain.max_order = integer(v); };
  f["modchain.single_pass_hz"] = [](RunConfig& c, std::string_view v) { c.modchain.single_pass_frequency = num(v); };
  f["modchain.target_difference_hz"] = [](RunConfig& c, std::string_view v) { c.modchain.target_difference = num(v); };
  f["modchain.single_pass_efficiency"] = [](RunConfig& c, std::string_view v) { c.modchain.single_pass_efficiency = num(v); };
  f["modchain.double_pass_efficiency"] = [](RunConfig& c, std::string_view v) { c.modchain.double_pass_efficiency = num(v); };
  return f;
}

// First line declaring `key` inside `[section]`, 0 if not found.
int line_of(std::string_view text, std::string_view section, std::string_view key) {
  std::string current;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line[0] == '[') {
      current = trim(line.substr(1, line.find(']') - 1));
      continue;
    }
    const auto eq = line.find('=');
    if (eq != std::string::npos && current == section && trim(line.substr(0, eq)) == key) return line_no;
  }
  return 0;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.experiment = ExperimentConfig::defaults();
  c.thermometry.span = constants::two_pi * 60e3;
  return c;
}

RunConfig parse_config(std::string_view text, std::string origin) {
  namespace pt = boost::property_tree;
  RunConfig cfg = default_config();
  cfg.origin = origin;
  cfg.text = std::string(text);

  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  Pending pending;
  const auto fields = make_fields(pending);
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(origin + ": key '" + section + "' appears outside any [section]");
    }
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const int line = line_of(text, section, key);
      const std::string where = origin + ":" + std::to_string(line) + ": " + name + ": ";
      const auto it = fields.find(name);
      if (it == fields.end()) throw ConfigError(where + "unknown key");
      try {
        it->second(cfg, node.data());
      } catch (const PreconditionError& e) {
        throw ConfigError(where + e.what());
      }
    }
  }

  try {
    if (pending.eta == "auto") {
      cfg.experiment.trap.eta_override.reset();
    } else if (!pending.eta.empty()) {
      cfg.experiment.trap.eta_override = io::parse_double(pending.eta);
    }
    if (pending.depump == "auto") {
      cfg.experiment.detection.depump_rate = 0.0;
      cfg.experiment.detection.depump_rate =
          depump_rate_for_dark_mean(cfg.experiment.detection, pending.dark_mean_target);
    } else {
      cfg.experiment.detection.depump_rate = io::parse_double(pending.depump);
    }
    cfg.experiment.validate();
    if (!(cfg.thermometry.probe_duration > 0.0) || !(cfg.thermometry.span > 0.0) ||
        cfg.thermometry.points < 5) {
      throw PreconditionError("thermometry: probe_us and span_hz must be > 0, points >= 5");
    }
    if (cfg.modchain.max_order < 1) throw PreconditionError("modchain: max_order must be >= 1");
  } catch (const PreconditionError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file '" + path.string() + "' does not exist or is not a file");
  }
  return parse_config(io::read_file(path), path.string());
}

}  // namespace ioncool::cli
