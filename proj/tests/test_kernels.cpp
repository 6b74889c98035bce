#include <doctest.h>

#include <cmath>
#include <vector>

#include "ioncool/kernels.hpp"
#include "ioncool/rng.hpp"
#include "ioncool/sequence.hpp"

using namespace ioncool;
namespace k = ioncool::kernels;

namespace {

std::vector<double> uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

struct BackendGuard {
  k::Backend saved = k::active_backend();
  ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("scalar sin^2 exchange conserves each pair") {
  Rng rng(1);
  auto lo = uniform_vec(rng, 37, 0, 0.5), up = uniform_vec(rng, 37, 0, 0.5);
  const auto w = uniform_vec(rng, 37, -3e5, 3e5);
  std::vector<double> sum(37);
  for (std::size_t i = 0; i < 37; ++i) sum[i] = lo[i] + up[i];
  k::scalar::two_level_exchange(lo, up, w, 1e4, 3e-5);
  for (std::size_t i = 0; i < 37; ++i) CHECK(lo[i] + up[i] == doctest::Approx(sum[i]).epsilon(1e-15));
}

TEST_CASE("avx2 kernels match the scalar reference") {
  if (!k::avx2_supported()) {
    MESSAGE("AVX2/FMA not available on this CPU; equivalence test skipped");
    return;
  }
#ifdef IONCOOL_HAVE_AVX2_KERNELS
  Rng rng(77);
  SUBCASE("sin^2 lane-wise, including huge arguments") {
    auto x = uniform_vec(rng, 1003, -200.0, 200.0);
    x.push_back(0.0);
    x.push_back(1e6);
    x.push_back(-3.3e7);
    x.push_back(1e300);
    std::vector<double> out(x.size());
    k::avx2::sin2(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = std::sin(x[i]);
      CHECK(std::abs(out[i] - s * s) <= 2e-15);
    }
  }
  SUBCASE("two-level exchange") {
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 257u}) {
      auto lo1 = uniform_vec(rng, n, 0, 1), up1 = uniform_vec(rng, n, 0, 1);
      auto lo2 = lo1, up2 = up1;
      const auto w = uniform_vec(rng, n, -3e5, 3e5);
      for (double det : {0.0, 2.5e4}) {
        k::scalar::two_level_exchange(lo1, up1, w, det, 4.5e-5);
        k::avx2::two_level_exchange(lo2, up2, w, det, 4.5e-5);
        for (std::size_t i = 0; i < n; ++i) {
          CHECK(lo2[i] == doctest::Approx(lo1[i]).epsilon(1e-13).scale(1.0));
          CHECK(up2[i] == doctest::Approx(up1[i]).epsilon(1e-13).scale(1.0));
        }
      }
    }
  }
  SUBCASE("weighted sin^2 sum") {
    for (std::size_t n : {1u, 5u, 8u, 241u}) {
      const auto wts = uniform_vec(rng, n, 0, 1), w = uniform_vec(rng, n, 0, 3e5);
      const double a = k::scalar::weighted_sin2_sum(wts, w, 2e-5);
      const double b = k::avx2::weighted_sin2_sum(wts, w, 2e-5);
      CHECK(b == doctest::Approx(a).epsilon(1e-13));
    }
  }
  SUBCASE("mixture score") {
    for (std::size_t n : {2u, 6u, 31u}) {
      const auto c = uniform_vec(rng, n, 0, 50), pa = uniform_vec(rng, n, 0.01, 1), pb = uniform_vec(rng, n, 0.01, 1);
      for (double a : {0.0, 0.3, 1.0}) {
        const auto s1 = k::scalar::mixture_score(c, pa, pb, a);
        const auto s2 = k::avx2::mixture_score(c, pa, pb, a);
        CHECK(s2.score == doctest::Approx(s1.score).epsilon(1e-12));
        CHECK(s2.information == doctest::Approx(s1.information).epsilon(1e-12));
      }
    }
  }
#endif
}

TEST_CASE("full cooling run agrees between backends") {
  BackendGuard guard;
  const auto cfg = ExperimentConfig::defaults();
  k::set_backend(k::Backend::Scalar);
  const auto a = prepare_state(cfg);
  if (!k::avx2_supported()) return;
  k::set_backend(k::Backend::Avx2);
  const auto b = prepare_state(cfg);
  CHECK(b.mean_n() == doctest::Approx(a.mean_n()).epsilon(1e-10));
  for (int n = 0; n <= 10; ++n) {
    CHECK(b.at(Level::Down, n) == doctest::Approx(a.at(Level::Down, n)).epsilon(1e-10).scale(1e-12));
  }
}

TEST_CASE("backend selection") {
  BackendGuard guard;
  k::set_backend(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
  CHECK(k::backend_name(k::Backend::Scalar) == "scalar");
  if (!k::avx2_supported()) CHECK_THROWS(k::set_backend(k::Backend::Avx2));
}
