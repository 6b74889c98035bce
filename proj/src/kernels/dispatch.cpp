#include <atomic>
#include <cstdlib>
#include <string>

#include "ioncool/error.hpp"
#include "ioncool/kernels.hpp"

namespace ioncool::kernels {
namespace {

Backend detect() noexcept {
  if (const char* env = std::getenv("IONCOOL_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return Backend::Scalar;
    if (want == "avx2" && avx2_supported()) return Backend::Avx2;
  }
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<int>& backend_slot() {
  static std::atomic<int> slot{static_cast<int>(detect())};
  return slot;
}

}  // namespace

bool avx2_supported() noexcept {
#ifdef IONCOOL_HAVE_AVX2_KERNELS
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Backend active_backend() noexcept {
  return static_cast<Backend>(backend_slot().load(std::memory_order_relaxed));
}

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_supported()) {
    throw PreconditionError("AVX2 backend requested but the CPU lacks AVX2/FMA");
  }
  backend_slot().store(static_cast<int>(backend), std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

void two_level_exchange(std::span<double> lower, std::span<double> upper,
                        std::span<const double> omega, double detuning,
                        double duration) {
#ifdef IONCOOL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) {
    avx2::two_level_exchange(lower, upper, omega, detuning, duration);
    return;
  }
#endif
  scalar::two_level_exchange(lower, upper, omega, detuning, duration);
}

double weighted_sin2_sum(std::span<const double> weights,
                         std::span<const double> omega, double duration) {
#ifdef IONCOOL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) {
    return avx2::weighted_sin2_sum(weights, omega, duration);
  }
#endif
  return scalar::weighted_sin2_sum(weights, omega, duration);
}

MixtureScore mixture_score(std::span<const double> counts,
                           std::span<const double> psi_a,
                           std::span<const double> psi_b, double a) {
#ifdef IONCOOL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) {
    return avx2::mixture_score(counts, psi_a, psi_b, a);
  }
#endif
  return scalar::mixture_score(counts, psi_a, psi_b, a);
}

}  // namespace ioncool::kernels
