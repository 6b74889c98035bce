#include <doctest.h>

#include <cmath>
#include <random>

#include "ioncool/error.hpp"
#include "ioncool/motional.hpp"

using namespace ioncool;

namespace {

// Explicit sum L_n^a(x) = sum_k (-1)^k C(n+a, n-k) x^k / k!, in long double.
long double laguerre_sum(int n, int a, long double x) {
  long double total = 0.0L;
  for (int k = 0; k <= n; ++k) {
    const long double binom = std::exp(std::lgamma((long double)(n + a + 1)) -
                                       std::lgamma((long double)(n - k + 1)) -
                                       std::lgamma((long double)(a + k + 1)));
    const long double term = binom * std::pow(x, k) / std::exp(std::lgamma((long double)(k + 1)));
    total += (k % 2 ? -term : term);
  }
  return total;
}

AtomConfig mg() { return AtomConfig::mg25(); }

}  // namespace

TEST_CASE("thermal distribution matches the geometric law") {
  const auto d = thermal_distribution(2.0, 80);
  for (int n = 0; n <= 10; ++n) {
    CHECK(d[n] == doctest::Approx(std::pow(2.0, n) / std::pow(3.0, n + 1)).epsilon(1e-12));
  }
  CHECK(d.mean() == doctest::Approx(2.0).epsilon(1e-9));
  const auto ground = thermal_distribution(0.0, 5);
  CHECK(ground[0] == 1.0);
  CHECK(ground.mean() == 0.0);
}

TEST_CASE("thermal distribution refuses a cutoff that loses population") {
  CHECK_THROWS_AS((void)thermal_distribution(10.0, 20), TruncationError);
  CHECK_NOTHROW((void)thermal_distribution(10.0, 256));
  CHECK_THROWS_AS((void)thermal_distribution(-1.0, 20), PreconditionError);
}

TEST_CASE("motional distribution validation") {
  CHECK_THROWS_AS((void)MotionalDistribution({0.5, 0.4}), PreconditionError);
  CHECK_THROWS_AS((void)MotionalDistribution({1.2, -0.2}), PreconditionError);
  CHECK_THROWS_AS((void)MotionalDistribution({0.5, 0.5}), TruncationError);
  CHECK_NOTHROW(MotionalDistribution({1.0, 0.0}));
}

TEST_CASE("Doppler limit against the closed form") {
  // T = hbar gamma / (2 kB), nbar = 1/(exp(hbar w / kB T) - 1), constants typed in here.
  const double hbar = 1.054571817e-34, kb = 1.380649e-23, pi = 3.14159265358979323846;
  const double gamma = 2 * pi * 41.4e6, w = 2 * pi * 2.0e6;
  const double t = hbar * gamma / (2 * kb);
  const double nbar = 1.0 / (std::exp(hbar * w / (kb * t)) - 1.0);
  const auto lim = doppler_limit_nbar(mg(), w);
  CHECK(lim.temperature == doctest::Approx(t).epsilon(1e-12));
  CHECK(lim.nbar == doctest::Approx(nbar).epsilon(1e-12));
  // frozen values of the oracle above
  CHECK(lim.temperature == doctest::Approx(0.99344e-3).epsilon(1e-4));
  CHECK(lim.nbar == doctest::Approx(9.858).epsilon(1e-3));
  CHECK_THROWS_AS((void)doppler_limit_nbar(mg(), 0.0), PreconditionError);
}

TEST_CASE("Lamb-Dicke parameter") {
  TrapConfig trap{2 * 3.14159265358979323846 * 2.0e6, 2 * 3.14159265358979323846 * 2.3e6, std::sqrt(2.0), {}};
  const double k = std::sqrt(2.0) * 2 * 3.14159265358979323846 / 279.6e-9;
  const double m = (24.98583696 - 5.48579909065e-4) * 1.66053906660e-27;
  const double x0 = std::sqrt(1.054571817e-34 / (2 * m * trap.omega_ax));
  CHECK(lamb_dicke(mg(), trap) == doctest::Approx(k * x0).epsilon(1e-12));
  CHECK(lamb_dicke(mg(), trap) == doctest::Approx(0.3195).epsilon(1e-3));
  trap.eta_override = 0.28;
  CHECK(lamb_dicke(mg(), trap) == 0.28);
  trap.raman_geometry_factor = 2.5;
  CHECK_THROWS_AS((void)lamb_dicke(mg(), trap), PreconditionError);
}

TEST_CASE("Laguerre recurrence agrees with the explicit expansion") {
  for (int a : {0, 1, 2}) {
    for (int n = 0; n <= 30; ++n) {
      for (double x : {0.0, 0.0784, 0.3, 1.0, 2.5}) {
        const double ref = static_cast<double>(laguerre_sum(n, a, x));
        CHECK(laguerre(n, a, x) == doctest::Approx(ref).epsilon(1e-9).scale(1.0));
      }
    }
  }
  CHECK(laguerre(3, 0, 0.0) == 1.0);
  CHECK(laguerre(2, 1, 0.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS((void)laguerre(-1, 0, 1.0), PreconditionError);
}

TEST_CASE("Rabi frequencies against the factorial form") {
  const double eta = 0.28, w0 = 1.0;
  for (int s : {-2, -1, 0, 1, 2}) {
    for (int n = std::max(0, -s); n <= 30; ++n) {
      const int lo = std::min(n, n + s), hi = std::max(n, n + s), a = std::abs(s);
      const long double ref = w0 * std::exp(-eta * eta / 2) * std::pow((long double)eta, a) *
                              std::sqrt(std::exp(std::lgamma((long double)lo + 1) - std::lgamma((long double)hi + 1))) *
                              laguerre_sum(lo, a, eta * eta);
      CHECK(rabi_frequency(n, s, eta, w0) == doctest::Approx((double)ref).epsilon(1e-9).scale(1e-3));
    }
  }
  CHECK(rabi_frequency(0, -1, eta, 1.0) == 0.0);
  CHECK(rabi_frequency(1, -2, eta, 1.0) == 0.0);
  // carrier at n=0 is the Debye-Waller factor
  CHECK(rabi_frequency(0, 0, eta, 2.0) == doctest::Approx(2.0 * std::exp(-eta * eta / 2)));
  // RSB n -> n-1 equals BSB n-1 -> n
  for (int n = 1; n < 60; ++n) {
    CHECK(rabi_frequency(n, -1, eta, 1.0) == doctest::Approx(rabi_frequency(n - 1, 1, eta, 1.0)));
    if (n >= 2) CHECK(rabi_frequency(n, -2, eta, 1.0) == doctest::Approx(rabi_frequency(n - 2, 2, eta, 1.0)));
  }
  const auto v = rabi_frequencies(40, -1, eta, 3.0);
  for (int n = 0; n <= 40; ++n) CHECK(v[n] == rabi_frequency(n, -1, eta, 3.0));
}

TEST_CASE("zero crossings of the Rabi frequencies at eta = 0.28") {
  // sign change of Omega_{n,n+s} scanned by brute force with the oracle above
  auto brute = [](int s) {
    const int start = std::max(0, -s);
    auto f = [&](int n) {
      const int lo = std::min(n, n + s);
      return laguerre_sum(lo, std::abs(s), 0.28L * 0.28L);
    };
    for (int n = start + 1; n < 256; ++n) {
      if ((f(n) < 0) != (f(start) < 0)) return n;
    }
    return -1;
  };
  for (int s : {0, -1, -2}) {
    const auto z = first_zero_crossing(s, 0.28, 256);
    REQUIRE(z.has_value());
    CHECK(*z == brute(s));
  }
  CHECK(*first_zero_crossing(0, 0.28, 256) == 18);
  CHECK(*first_zero_crossing(-1, 0.28, 256) == 47);
  CHECK(*first_zero_crossing(-2, 0.28, 256) == 85);
  CHECK_FALSE(first_zero_crossing(0, 0.28, 10).has_value());
}
