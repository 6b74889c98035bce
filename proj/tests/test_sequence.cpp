#include <doctest.h>

#include <cmath>

#include "ioncool/constants.hpp"
#include "ioncool/error.hpp"
#include "ioncool/sequence.hpp"

using namespace ioncool;
using constants::two_pi;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

IonState doppler(const ExperimentConfig& cfg) {
  return apply_doppler_cool(IonState::fock(Level::Down, 0, cfg.n_max), cfg.atom, cfg.trap);
}

}  // namespace

TEST_CASE("default schedule layout") {
  const auto cfg = ExperimentConfig::defaults();
  const auto seq = build_sbc_sequence(cfg, cfg.schedule);
  CHECK(seq.count(PulseKind::Sideband) == 120);
  CHECK(seq.count(PulseKind::Repump) == 120);
  CHECK(seq.steps.size() == 240);
  CHECK(seq.total_duration() > 5e-3);
  CHECK(seq.total_duration() < 20e-3);
  // first block: 2nd-order pulses from n = 40 down, then 1st order from 15
  CHECK(seq.steps[0].order == -2);
  CHECK(seq.steps[0].duration ==
        doctest::Approx(constants::pi / std::abs(rabi_frequency(40, -2, 0.28, cfg.raman_omega0))));
  CHECK(seq.steps[50].order == -1);
  CHECK(seq.steps[50].duration ==
        doctest::Approx(constants::pi / std::abs(rabi_frequency(15, -1, 0.28, cfg.raman_omega0))));
  CHECK(seq.steps[1].kind == PulseKind::Repump);
  CHECK(seq.steps[1].duration == doctest::Approx(cfg.repump_block_duration()));
}

TEST_CASE("schedule errors") {
  auto cfg = ExperimentConfig::defaults();
  SbcSchedule s = cfg.schedule;
  s.first_order.count = 0;
  s.second_order.count = 0;
  CHECK_THROWS_AS((void)build_sbc_sequence(cfg, s), ScheduleError);

  s = cfg.schedule;
  s.repeats = 0;
  CHECK_THROWS_AS((void)build_sbc_sequence(cfg, s), ScheduleError);

  s = cfg.schedule;
  s.second_order = {40, 40};  // reaches n = 1 < 2
  CHECK_THROWS_AS((void)build_sbc_sequence(cfg, s), ScheduleError);
  s = cfg.schedule;
  s.first_order = {16, 15};  // reaches n = 0
  CHECK_THROWS_AS((void)build_sbc_sequence(cfg, s), ScheduleError);
  s = cfg.schedule;
  s.second_order = {1, 300};  // above n_max
  CHECK_THROWS_AS((void)build_sbc_sequence(cfg, s), ScheduleError);

  // eta^2 = 2: L_1^1(2) = 0, the first-order coupling out of n = 2 vanishes
  cfg.trap.eta_override = std::sqrt(2.0);
  s = {{0, 0}, {2, 2}, 1};
  try {
    (void)build_sbc_sequence(cfg, s);
    FAIL("expected ScheduleError");
  } catch (const ScheduleError& e) {
    CHECK(std::string(e.what()).find("n=2") != std::string::npos);
  }
}

TEST_CASE("cooling run") {
  const auto cfg = ExperimentConfig::defaults();
  const auto seq = build_sbc_sequence(cfg, cfg.schedule);
  const auto start = doppler(cfg);
  CHECK(start.mean_n() == doctest::Approx(9.858).epsilon(1e-3));

  std::vector<double> after_block;
  const std::size_t block = seq.steps.size() / 3;
  const auto final_state = run_sequence(start, seq, cfg, [&](std::size_t i, const PulseSpec&, const IonState& s) {
    if ((i + 1) % block == 0) after_block.push_back(s.mean_n());
    CHECK(std::abs(s.total() - 1.0) < 1e-9);
  });
  REQUIRE(after_block.size() == 3);
  CHECK(after_block[0] < start.mean_n());
  CHECK(after_block[1] < after_block[0]);
  CHECK(after_block[2] < after_block[1]);
  CHECK(final_state.mean_n() <= 0.05);
  CHECK(final_state.motional()[0] > 0.95);

  const auto again = run_sequence(start, seq, cfg);
  CHECK(again == final_state);
  CHECK(prepare_state(cfg) == final_state);
}

TEST_CASE("one sideband pulse plus repump removes one quantum") {
  auto cfg = ExperimentConfig::defaults();
  cfg.dissipation.leak_up_rate = cfg.dissipation.leak_down_rate = 0.0;
  for (int n : {1, 5, 17, 30}) {
    SbcSchedule s{{0, 0}, {1, n}, 1};
    const auto seq = build_sbc_sequence(cfg, s);
    const auto out = run_sequence(IonState::fock(Level::Down, n, cfg.n_max), seq, cfg);
    // spin may sit in aux (bright) after the last pump; the motion must be n - 1
    CHECK(out.motional()[static_cast<std::size_t>(n - 1)] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.level_population(Level::Up) < 1e-12);
  }
}

TEST_CASE("zero-duration steps leave the state alone") {
  auto cfg = ExperimentConfig::defaults();
  cfg.dissipation.leak_up_rate = 900.0;
  Sequence seq;
  seq.steps = {{PulseKind::Sideband, -1, 0.0, cfg.raman_omega0, 0.0},
               {PulseKind::Carrier, 0, 0.0, cfg.raman_omega0, 1e3},
               {PulseKind::RF, 0, 0.0, cfg.rf_omega, 0.0}};
  const auto s = doppler(cfg);
  CHECK(run_sequence(s, seq, cfg) == s);
}

TEST_CASE("n_max mismatch") {
  const auto cfg = ExperimentConfig::defaults();
  const auto seq = build_sbc_sequence(cfg, cfg.schedule);
  CHECK_THROWS_AS((void)run_sequence(IonState::fock(Level::Down, 0, 100), seq, cfg), PreconditionError);
}

TEST_CASE("scans") {
  const auto cfg = ExperimentConfig::defaults();
  const auto prepared = prepare_state(cfg);
  const PulseSpec rsb{PulseKind::Sideband, -1, 45e-6, cfg.raman_omega0, 0.0};
  const auto det = linspace(-two_pi * 60e3, two_pi * 60e3, 41);

  SUBCASE("reproducible for a seed") {
    const auto a = scan_frequency(cfg, prepared, rsb, det, 300, 7);
    const auto b = scan_frequency(cfg, prepared, rsb, det, 300, 7);
    const auto c = scan_frequency(cfg, prepared, rsb, det, 300, 8);
    CHECK(a.y == b.y);
    CHECK(a.sigma_y == b.sigma_y);
    CHECK(a.y != c.y);
    CHECK(a.x == det);
  }
  SUBCASE("red sideband of the cooled ion is nearly dark") {
    const auto s = scan_frequency(cfg, prepared, rsb, det, 0, 0);
    double peak = 0.0;
    for (double y : s.y) peak = std::max(peak, y);
    CHECK(peak <= 0.05);
  }
  SUBCASE("zero probe time gives no excitation") {
    const auto s = scan_time(cfg, prepared, rsb, {0.0}, 0, 0);
    CHECK(s.y[0] < 1e-3);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS((void)scan_time(cfg, prepared, rsb, {-1e-6}, 0, 0), PreconditionError);
    CHECK_THROWS_AS((void)scan_time(cfg, prepared, rsb, {}, 0, 0), PreconditionError);
    CHECK_THROWS_AS((void)scan_frequency(cfg, prepared, rsb, det, -1, 0), PreconditionError);
  }
}

TEST_CASE("Doppler sideband ratio") {
  const auto cfg = ExperimentConfig::defaults();
  const auto start = doppler(cfg);
  const auto det = linspace(-two_pi * 60e3, two_pi * 60e3, 41);
  const PulseSpec rsb{PulseKind::Sideband, -1, 45e-6, cfg.raman_omega0, 0.0};
  PulseSpec bsb = rsb;
  bsb.order = +1;
  const auto red = scan_frequency(cfg, start, rsb, det, 0, 0);
  const auto blue = scan_frequency(cfg, start, bsb, det, 0, 1);
  const auto pair = analyze_sideband_pair(red, blue);
  const double nbar = start.mean_n();
  CHECK(pair.thermometry.q == doctest::Approx(nbar / (nbar + 1.0)).epsilon(1e-3));
}

TEST_CASE("RF flop recovers the RF Rabi frequency") {
  const auto cfg = ExperimentConfig::defaults();
  const auto prepared = prepare_state(cfg);
  const PulseSpec rf{PulseKind::RF, 0, 0.0, cfg.rf_omega, 0.0};
  const auto s = scan_time(cfg, prepared, rf, linspace(0.0, 40e-6, 41), 300, 3);
  const auto fit = fit_rabi_sinusoid(s);
  CHECK(fit.report.converged);
  CHECK(std::abs(fit.omega.value - cfg.rf_omega) < 3.0 * fit.omega.sigma);
}

TEST_CASE("sequence text round trip") {
  auto cfg = ExperimentConfig::defaults();
  cfg.seed = 42;
  auto seq = build_sbc_sequence(cfg, cfg.schedule);
  seq.metadata.config_hash = "0123456789abcdef";
  const auto text = sequence_to_text(seq);
  CHECK(text.find("kind,order,duration_us,detuning_Hz,omega0_Hz\n") != std::string::npos);
  const auto back = sequence_from_text(text);
  REQUIRE(back.steps.size() == seq.steps.size());
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    CHECK(back.steps[i].kind == seq.steps[i].kind);
    CHECK(back.steps[i].order == seq.steps[i].order);
    CHECK(back.steps[i].duration == doctest::Approx(seq.steps[i].duration).epsilon(1e-14));
    CHECK(back.steps[i].omega0 == doctest::Approx(seq.steps[i].omega0).epsilon(1e-14));
    CHECK(back.steps[i].detuning == seq.steps[i].detuning);
  }
  CHECK(back.metadata.label == "sbc");
  CHECK(back.metadata.seed == 42);
  CHECK(back.metadata.config_hash == "0123456789abcdef");

  try {
    (void)sequence_from_text("kind,order,duration_us,detuning_Hz,omega0_Hz\nsideband,-1,10,0\n");
    FAIL("expected error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)sequence_from_text("warp,0,1,0,0\n"), PreconditionError);
  CHECK_THROWS_AS((void)sequence_from_text("carrier,0,1x,0,0\n"), PreconditionError);
}
