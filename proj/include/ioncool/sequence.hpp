#pragma once

// Experiment recipes: the sideband-cooling schedule, its execution on an
// IonState, state preparation and simulated frequency and time scans.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ioncool/analysis.hpp"
#include "ioncool/detection.hpp"
#include "ioncool/dynamics.hpp"
#include "ioncool/motional.hpp"

namespace ioncool {

struct SbcPulseSet {
  int count = 0;
  int n_start = 0;
};

// Pulse k of a set (k = 0 .. count-1) targets n_start - k.
struct SbcSchedule {
  SbcPulseSet second_order{25, 40};
  SbcPulseSet first_order{15, 15};
  int repeats = 3;

  void validate() const;
};

struct ExperimentConfig {
  AtomConfig atom;
  TrapConfig trap;
  DissipationConfig dissipation;
  DetectionModel detection;
  double raman_omega0 = 0.0;  // rad/s
  double rf_omega = 0.0;      // rad/s, also used for the repump RF_recover pulse
  int shots_per_point = 300;
  std::uint64_t seed = 0;
  int n_max = kDefaultNMax;
  SbcSchedule schedule;
  bool prepare_with_sbc = true;  // state preparation before probing: Doppler (+ SBC)

  void validate() const;
  [[nodiscard]] double eta() const;
  // Duration of one repump block: cycles of optical pump + RF_recover pi
  // pulse, closed by a final optical pump.
  [[nodiscard]] double repump_block_duration() const;

  static ExperimentConfig defaults();
};

struct SequenceMetadata {
  std::string label;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct Sequence {
  std::vector<PulseSpec> steps;
  SequenceMetadata metadata;

  void validate() const;
  [[nodiscard]] double total_duration() const;  // s
  [[nodiscard]] std::size_t count(PulseKind kind) const;
};

// Throws ScheduleError on an empty schedule, targets below |order| and
// targets whose Rabi frequency lies within 1e-3 Omega0 of a zero crossing.
[[nodiscard]] Sequence build_sbc_sequence(const ExperimentConfig& cfg, const SbcSchedule& schedule);

using StepObserver = std::function<void(std::size_t index, const PulseSpec& step, const IonState& after)>;

// Population-level execution; leakage acts during every Raman-illuminated step.
[[nodiscard]] IonState run_sequence(const IonState& state, const Sequence& seq,
                                    const ExperimentConfig& cfg, const StepObserver& observer = {});

// Doppler cooling from |down, 0>, followed by the configured SBC schedule
// when prepare_with_sbc is set and repeats > 0.
[[nodiscard]] IonState prepare_state(const ExperimentConfig& cfg);

// Applies one probe pulse (coherent Raman or RF) with leakage.
[[nodiscard]] IonState apply_probe(const IonState& state, const PulseSpec& probe,
                                   const ExperimentConfig& cfg);

// Per point: probe the prepared state, simulate `shots` detections and fit
// the bright amplitude a; y = 1 - a. shots = 0 skips sampling and reports
// the exact excitation with a nominal sigma of 1e-3.
[[nodiscard]] ScanData scan_frequency(const ExperimentConfig& cfg, const PulseSpec& pulse_template,
                                      const std::vector<double>& detunings, int shots,
                                      std::uint64_t seed);
[[nodiscard]] ScanData scan_time(const ExperimentConfig& cfg, const PulseSpec& pulse_template,
                                 const std::vector<double>& durations, int shots, std::uint64_t seed);

// Same, starting from an explicit state instead of prepare_state(cfg).
[[nodiscard]] ScanData scan_frequency(const ExperimentConfig& cfg, const IonState& prepared,
                                      const PulseSpec& pulse_template,
                                      const std::vector<double>& detunings, int shots,
                                      std::uint64_t seed);
[[nodiscard]] ScanData scan_time(const ExperimentConfig& cfg, const IonState& prepared,
                                 const PulseSpec& pulse_template,
                                 const std::vector<double>& durations, int shots, std::uint64_t seed);

// Text form: '#' metadata lines, a header, then one step per line
// "kind,order,duration_us,detuning_Hz,omega0_Hz" (Hz = angular / 2 pi).
[[nodiscard]] std::string sequence_to_text(const Sequence& seq);
[[nodiscard]] Sequence sequence_from_text(std::string_view text);

}  // namespace ioncool
