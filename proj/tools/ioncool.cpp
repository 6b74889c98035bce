#include <CLI11.hpp>
#include <iostream>

#include "ioncool/cli.hpp"

namespace {

void add_common(CLI::App* cmd, ioncool::cli::CommonOptions& o, std::string& config) {
  cmd->add_option("--config", config, "INI config file (built-in defaults when omitted)");
  cmd->add_option("--seed", o.seed, "master seed, overrides [experiment] seed");
  cmd->add_option("--shots", o.shots, "detection shots per scan point")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ioncool::cli;
  CLI::App app{"ioncool: resolved-sideband Raman cooling simulator"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  CommonOptions cool_opts, scan_opts, mod_opts;
  std::string cool_cfg, scan_cfg, mod_cfg;
  ScanOptions scan;

  auto* cool = app.add_subcommand("cool", "Doppler reset + sideband-cooling schedule, with thermometry");
  add_common(cool, cool_opts, cool_cfg);

  auto* sc = app.add_subcommand("scan", "Simulated frequency or time scan with fit");
  add_common(sc, scan_opts, scan_cfg);
  sc->add_option("--observable", scan.observable, "rsb | bsb | carrier | rf")
      ->check(CLI::IsMember({"rsb", "bsb", "carrier", "rf"}))
      ->capture_default_str();
  sc->add_option("--axis", scan.axis, "frequency | time")
      ->check(CLI::IsMember({"frequency", "time"}))
      ->capture_default_str();
  sc->add_option("--start", scan.start, "first point: detuning in Hz or time in us");
  sc->add_option("--stop", scan.stop, "last point: detuning in Hz or time in us");
  sc->add_option("--points", scan.points, "number of scan points");
  sc->add_option("--probe-us", scan.probe_us, "probe length for frequency scans, us");
  sc->add_option("--prepare", scan.prepare, "state preparation: doppler | sbc")
      ->check(CLI::IsMember({"doppler", "sbc"}));

  auto* mod = app.add_subcommand("modchain", "EOM/SHG sideband table and AOM chain solution");
  add_common(mod, mod_opts, mod_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cool->parsed()) {
      cool_opts.config_path = cool_cfg;
      return cmd_cool(cool_opts, std::cout);
    }
    if (sc->parsed()) {
      scan_opts.config_path = scan_cfg;
      return cmd_scan(scan_opts, scan, std::cout);
    }
    mod_opts.config_path = mod_cfg;
    return cmd_modchain(mod_opts, std::cout);
  } catch (const std::exception& e) {
    return report_failure(e, std::cerr);
  }
}
