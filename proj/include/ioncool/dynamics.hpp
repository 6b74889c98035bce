#pragma once

// Population-level dynamics of one ion: spin levels {down, up, aux} times the
// axial Fock ladder. Coherent pulses use the closed-form detuned Rabi
// transfer per Fock index; only populations are carried between steps.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "ioncool/motional.hpp"

namespace ioncool {

// down = |F=3,mF=3>, up = |2,2>, aux = |3,2>.
enum class Level { Down = 0, Up = 1, Aux = 2 };

class IonState {
 public:
  // All population in |level, n>.
  static IonState fock(Level level, int n, int n_max);
  static IonState product(Level level, const MotionalDistribution& motion);
  // Takes raw per-level vectors (each of length n_max+1); validates entries in
  // [0,1] and unit total within 1e-9.
  static IonState from_populations(std::array<std::vector<double>, 3> pop);

  [[nodiscard]] int n_max() const { return static_cast<int>(pop_[0].size()) - 1; }
  [[nodiscard]] std::span<const double> level(Level l) const { return pop_[index(l)]; }
  [[nodiscard]] std::span<double> level(Level l) { return pop_[index(l)]; }
  [[nodiscard]] double at(Level l, int n) const { return pop_[index(l)][static_cast<std::size_t>(n)]; }

  [[nodiscard]] double total() const;
  [[nodiscard]] double level_population(Level l) const;
  // Marginal over spin levels.
  [[nodiscard]] std::vector<double> motional() const;
  [[nodiscard]] double mean_n() const;
  // Probability that detection sees fluorescence: down and aux both lie in
  // the F=3 manifold and are pumped into the cycling transition.
  [[nodiscard]] double bright_probability() const;

  // Throws PreconditionError if |total - 1| > 1e-9.
  void require_normalized(std::string_view op) const;

  friend bool operator==(const IonState&, const IonState&) = default;

 private:
  explicit IonState(std::array<std::vector<double>, 3> pop) : pop_(std::move(pop)) {}
  static std::size_t index(Level l) { return static_cast<std::size_t>(l); }
  std::array<std::vector<double>, 3> pop_;
};

enum class PulseKind { Carrier, Sideband, RF, RFRecover, Repump, DopplerCool, RamanIdle };

[[nodiscard]] std::string_view to_string(PulseKind kind);
// Throws PreconditionError on unknown names.
[[nodiscard]] PulseKind pulse_kind_from_string(std::string_view name);

struct PulseSpec {
  PulseKind kind = PulseKind::Carrier;
  int order = 0;          // motional change for Sideband: -2, -1, +1, +2
  double duration = 0.0;  // s
  double omega0 = 0.0;    // rad/s, bare Rabi frequency
  double detuning = 0.0;  // rad/s from the addressed resonance

  void validate() const;
  // n -> n + shift for the coupled upper state.
  [[nodiscard]] int motional_shift() const { return kind == PulseKind::Sideband ? order : 0; }
  // Raman beams on: off-resonant leakage applies for the pulse duration.
  [[nodiscard]] bool raman_illuminated() const;

  friend bool operator==(const PulseSpec&, const PulseSpec&) = default;
};

struct DissipationConfig {
  double repump_down_branch = 0.5;  // per optical pump: up -> down (rest -> aux)
  int repump_cycles = 4;
  double repump_pulse_duration = 5e-6;  // s, optical part of one cycle (timing only)
  double recoil_heating_per_photon = 0.0;  // probability of n -> n+1 per pump event
  double leak_up_rate = 0.0;    // 1/s, down -> up under Raman light
  double leak_down_rate = 0.0;  // 1/s, up -> down under Raman light

  void validate() const;
};

// Carrier, Sideband and RF pulses. Population moves between (down, n) and
// (up, n+s) with the detuned Rabi transfer probability; aux is untouched.
[[nodiscard]] IonState apply_coherent_pulse(const IonState& state, const PulseSpec& pulse,
                                            double eta);

// RF couples down<->up independent of n; RFRecover couples aux<->up.
[[nodiscard]] IonState apply_rf_pulse(const IonState& state, const PulseSpec& pulse);

// repump_cycles x (optical pump, then perfect RF_recover pi-pulse aux->up),
// followed by one final optical pump. Each optical pump sends up to down with
// repump_down_branch and to aux otherwise; with recoil heating h > 0 the pumped
// population moves n -> n+1 with probability h (n_max absorbs).
[[nodiscard]] IonState apply_repump(const IonState& state, const DissipationConfig& cfg);

// Resets to down x thermal(doppler_limit_nbar(atom, trap.omega_ax)).
[[nodiscard]] IonState apply_doppler_cool(const IonState& state, const AtomConfig& atom,
                                          const TrapConfig& trap);

struct LeakageResult {
  IonState state;
  bool clamped = false;  // rate*duration exceeded 1 and was clamped
};

// First-order off-resonant excitation: down->up with leak_up_rate*t and
// up->down with leak_down_rate*t, motional distribution unchanged.
[[nodiscard]] LeakageResult apply_leakage(const IonState& state, double duration,
                                          const DissipationConfig& cfg);

}  // namespace ioncool
