// Compiled with -mavx2 -mfma. Only reached through the dispatcher after a
// CPUID check, or directly from tests that check avx2_supported() first.
#include "ioncool/kernels.hpp"

#include <immintrin.h>

#include <array>
#include <cmath>
#include <cstddef>

namespace ioncool::kernels::avx2 {
namespace {

// pi/2 split into three parts (fdlibm). pio2_hi carries 33 significant bits,
// so q * pio2_hi is exact for |q| < 2^20.
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624871116645580e-21;
constexpr double kTwoOverPi = 0.636619772367581343076;
// Beyond this the three-part reduction is no longer exact; those lanes are
// recomputed with std::sin.
constexpr double kReductionLimit = 823549.6;  // ~ 2^19 * pi/2

// Minimax coefficients on [-pi/4, pi/4] (Cephes sin.c / cos.c).
constexpr double kSin[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                            2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                            8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCos[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                            -2.75573141792967388112e-7, 2.48015872888517045348e-5,
                            -1.38888888888730564116e-3, 4.16666666666665929218e-2};

inline __m256d poly6(__m256d z, const double (&c)[6]) {
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 6; ++i) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[i]));
  return p;
}

// sin^2(y) lane-wise. The sign of sin is never needed, so only the parity of
// the quadrant matters: odd quadrants use cos^2 of the reduced argument.
inline __m256d sin2_pd(__m256d y) {
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(y, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Hi), y);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);
  // sin r = r + r^3 * P(z)
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(r, z), poly6(z, kSin), r);
  // cos r = 1 - z/2 + z^2 * Q(z)
  const __m256d c = _mm256_fmadd_pd(_mm256_mul_pd(z, z), poly6(z, kCos),
                                    _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z,
                                                     _mm256_set1_pd(1.0)));
  // odd quadrant <=> q - 2*floor(q/2) == 1
  const __m256d half_q = _mm256_mul_pd(q, _mm256_set1_pd(0.5));
  const __m256d parity = _mm256_sub_pd(
      q, _mm256_mul_pd(_mm256_set1_pd(2.0),
                       _mm256_round_pd(half_q, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC)));
  const __m256d odd = _mm256_cmp_pd(parity, _mm256_set1_pd(0.5), _CMP_GT_OQ);
  const __m256d v = _mm256_blendv_pd(s, c, odd);
  __m256d out = _mm256_mul_pd(v, v);

  const __m256d abs_y = _mm256_andnot_pd(_mm256_set1_pd(-0.0), y);
  const __m256d big = _mm256_cmp_pd(abs_y, _mm256_set1_pd(kReductionLimit), _CMP_NLT_UQ);
  if (_mm256_movemask_pd(big) != 0) {
    alignas(32) std::array<double, 4> ys{};
    alignas(32) std::array<double, 4> os{};
    _mm256_store_pd(ys.data(), y);
    _mm256_store_pd(os.data(), out);
    const int mask = _mm256_movemask_pd(big);
    for (int lane = 0; lane < 4; ++lane) {
      if (mask & (1 << lane)) {
        const double sv = std::sin(ys[lane]);
        os[lane] = sv * sv;
      }
    }
    out = _mm256_load_pd(os.data());
  }
  return out;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double sin2_scalar(double y) {
  const double s = std::sin(y);
  return s * s;
}

}  // namespace

void sin2(std::span<const double> x, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) {
    _mm256_storeu_pd(out.data() + i, sin2_pd(_mm256_loadu_pd(x.data() + i)));
  }
  for (; i < x.size(); ++i) out[i] = sin2_scalar(x[i]);
}

void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration) {
  const std::size_t n = omega.size();
  const double d2 = detuning * detuning;
  const __m256d vd2 = _mm256_set1_pd(d2);
  const __m256d vhalf_t = _mm256_set1_pd(0.5 * duration);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_loadu_pd(omega.data() + i);
    const __m256d w2 = _mm256_mul_pd(w, w);
    const __m256d g2 = _mm256_add_pd(w2, vd2);
    const __m256d nonzero = _mm256_cmp_pd(g2, zero, _CMP_NEQ_UQ);
    const __m256d safe_g2 = _mm256_blendv_pd(_mm256_set1_pd(1.0), g2, nonzero);
    const __m256d s2 = sin2_pd(_mm256_mul_pd(_mm256_sqrt_pd(g2), vhalf_t));
    const __m256d p = _mm256_and_pd(
        _mm256_mul_pd(_mm256_div_pd(w2, safe_g2), s2), nonzero);
    const __m256d lo = _mm256_loadu_pd(lower.data() + i);
    const __m256d up = _mm256_loadu_pd(upper.data() + i);
    _mm256_storeu_pd(lower.data() + i, _mm256_fmadd_pd(p, _mm256_sub_pd(up, lo), lo));
    _mm256_storeu_pd(upper.data() + i, _mm256_fmadd_pd(p, _mm256_sub_pd(lo, up), up));
  }
  if (i < n) {
    scalar::two_level_exchange(lower.subspan(i), upper.subspan(i),
                               omega.subspan(i), detuning, duration);
  }
}

double weighted_sin2_sum(std::span<const double> weights,
                         std::span<const double> omega, double duration) {
  const std::size_t n = weights.size();
  const __m256d vhalf_t = _mm256_set1_pd(0.5 * duration);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_mul_pd(_mm256_loadu_pd(omega.data() + i), vhalf_t);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights.data() + i), sin2_pd(y), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += weights[i] * sin2_scalar(0.5 * omega[i] * duration);
  return total;
}

MixtureScore mixture_score(std::span<const double> counts,
                           std::span<const double> psi_a,
                           std::span<const double> psi_b, double a) {
  const std::size_t n = counts.size();
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(1.0 - a);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d score = zero;
  __m256d info = zero;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d c = _mm256_loadu_pd(counts.data() + k);
    const __m256d pa = _mm256_loadu_pd(psi_a.data() + k);
    const __m256d pb = _mm256_loadu_pd(psi_b.data() + k);
    const __m256d used = _mm256_cmp_pd(c, zero, _CMP_NEQ_UQ);
    const __m256d d = _mm256_sub_pd(pa, pb);
    const __m256d m = _mm256_fmadd_pd(va, pa, _mm256_mul_pd(vb, pb));
    const __m256d r = _mm256_and_pd(
        _mm256_div_pd(d, _mm256_blendv_pd(one, m, used)), used);
    const __m256d cr = _mm256_mul_pd(c, r);
    score = _mm256_add_pd(score, cr);
    info = _mm256_fmadd_pd(cr, r, info);
  }
  MixtureScore out{hsum(score), hsum(info)};
  if (k < n) {
    const MixtureScore tail = scalar::mixture_score(
        counts.subspan(k), psi_a.subspan(k), psi_b.subspan(k), a);
    out.score += tail.score;
    out.information += tail.information;
  }
  return out;
}

}  // namespace ioncool::kernels::avx2
