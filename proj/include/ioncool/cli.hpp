#pragma once

// Configuration loading and the cool / scan / modchain commands behind the
// ioncool executable. Frequencies in the config file are ordinary
// frequencies in Hz (angular / 2 pi); times are in microseconds.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "ioncool/sequence.hpp"

namespace ioncool::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFit = 3;

[[nodiscard]] std::string_view tool_version();

struct ThermometrySettings {
  double probe_duration = 45e-6;  // s
  double span = 0.0;              // rad/s, scan covers [-span, span]
  int points = 41;
};

struct ModchainSettings {
  double beta = 0.58;
  std::optional<double> carrier_to_sideband_ratio;  // overrides beta when set
  double mod_frequency = 9.2e9;                      // Hz
  double fundamental_wavelength = 1118e-9;           // m
  int max_order = 5;
  double single_pass_frequency = 450e6;  // Hz
  double target_difference = 1.789e9;    // Hz
  // Recorded in the outputs only.
  double single_pass_efficiency = 0.7;
  double double_pass_efficiency = 0.5;
};

struct RunConfig {
  ExperimentConfig experiment;
  ThermometrySettings thermometry;
  ModchainSettings modchain;
  std::string origin;  // path or label of the source
  std::string text;    // raw config contents

  [[nodiscard]] std::string hash() const;  // FNV-1a 64 of the raw contents, hex
};

// Built-in defaults, i.e. the result of parsing an empty file.
[[nodiscard]] RunConfig default_config();
// Throws ConfigError naming the line or the section.key at fault.
[[nodiscard]] RunConfig parse_config(std::string_view text, std::string origin);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

struct CommonOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> shots;
  std::filesystem::path out_dir = ".";
};

struct ScanOptions {
  std::string observable = "rsb";  // rsb | bsb | carrier | rf
  std::string axis = "frequency";  // frequency | time
  std::optional<double> start;     // Hz (detuning) or us
  std::optional<double> stop;
  std::optional<int> points;
  std::optional<double> probe_us;     // probe length on the frequency axis
  std::optional<std::string> prepare;  // doppler | sbc
};

int cmd_cool(const CommonOptions& opts, std::ostream& log);
int cmd_scan(const CommonOptions& opts, const ScanOptions& scan, std::ostream& log);
int cmd_modchain(const CommonOptions& opts, std::ostream& out);

// Exit code for an exception escaping a command, after printing it to err.
int report_failure(const std::exception& e, std::ostream& err);

}  // namespace ioncool::cli
