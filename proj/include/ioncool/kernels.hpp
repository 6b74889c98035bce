#pragma once

// Data-parallel inner loops shared by the simulator and the fitters.
//
// Every kernel has a scalar reference implementation (namespace scalar) and,
// on x86-64, an AVX2+FMA implementation (namespace avx2). The free functions
// in namespace kernels dispatch to the backend chosen at first use: AVX2 when
// the CPU reports AVX2 and FMA, scalar otherwise. The environment variable
// IONCOOL_SIMD=scalar|avx2 or set_backend() overrides the choice.
//
// The two backends agree to a few ulp, not bit-for-bit: the vector sine uses
// its own range reduction and the reductions sum in a different order.

#include <span>
#include <string_view>

namespace ioncool::kernels {

enum class Backend { Scalar, Avx2 };

[[nodiscard]] bool avx2_supported() noexcept;
[[nodiscard]] Backend active_backend() noexcept;
// Throws PreconditionError when the backend is not supported on this CPU.
void set_backend(Backend backend);
[[nodiscard]] std::string_view backend_name(Backend backend) noexcept;

// Detuned Rabi transfer on a ladder of independent two-level systems.
// For each i: p = omega^2/(omega^2+detuning^2) * sin^2(sqrt(omega^2+detuning^2)*t/2),
// then (lower, upper) <- (lower*(1-p) + upper*p, upper*(1-p) + lower*p).
// All three spans have the same length.
void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration);

// sum_i weights[i] * sin^2(omega[i] * t / 2)
[[nodiscard]] double weighted_sin2_sum(std::span<const double> weights,
                                       std::span<const double> omega,
                                       double duration);

// Score and negated curvature of the two-component mixture log-likelihood
//   l(a) = sum_k c_k log(a*psi_a[k] + (1-a)*psi_b[k]).
// score = dl/da, information = -d2l/da2. Bins with c_k == 0 are skipped.
struct MixtureScore {
  double score = 0.0;
  double information = 0.0;
};
[[nodiscard]] MixtureScore mixture_score(std::span<const double> counts,
                                         std::span<const double> psi_a,
                                         std::span<const double> psi_b,
                                         double a);

namespace scalar {
void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration);
double weighted_sin2_sum(std::span<const double> weights,
                         std::span<const double> omega, double duration);
MixtureScore mixture_score(std::span<const double> counts,
                           std::span<const double> psi_a,
                           std::span<const double> psi_b, double a);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define IONCOOL_HAVE_AVX2_KERNELS 1
namespace avx2 {
void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration);
double weighted_sin2_sum(std::span<const double> weights,
                         std::span<const double> omega, double duration);
MixtureScore mixture_score(std::span<const double> counts,
                           std::span<const double> psi_a,
                           std::span<const double> psi_b, double a);
// Exposed for equivalence tests: sin^2(x) lane-wise.
void sin2(std::span<const double> x, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace ioncool::kernels
