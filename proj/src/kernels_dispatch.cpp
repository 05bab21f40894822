#include "slicesim/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace slicesim::kernels {
namespace {

struct Vtable {
  std::size_t (*argmax)(const double*, std::size_t);
  double (*max_abs)(const double*, std::size_t);
  void (*scatter_axpy)(double, const std::int32_t*, const double*, std::size_t,
                       double*);
  double (*sparse_dot)(const std::int32_t*, const double*, std::size_t,
                       const double*);
  RatioHit (*min_ratio)(const double*, const double*, const double*,
                        const double*, std::size_t, double, double);
};

constexpr Vtable kScalar{detail::argmax_scalar, detail::max_abs_scalar,
                         detail::scatter_axpy_scalar, detail::sparse_dot_scalar,
                         detail::min_ratio_scalar};
constexpr Vtable kAvx2{detail::argmax_avx2, detail::max_abs_avx2,
                       detail::scatter_axpy_avx2, detail::sparse_dot_avx2,
                       detail::min_ratio_avx2};

Backend pick_default() {
  // SLICESIM_KERNELS=scalar|avx2 overrides autodetection; an avx2 request on
  // hardware without the extension falls back to scalar rather than faulting.
  if (const char* env = std::getenv("SLICESIM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      return detail::avx2_available() ? Backend::avx2 : Backend::scalar;
    }
  }
  return detail::avx2_available() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();
const Vtable* g_vt = (g_backend == Backend::avx2) ? &kAvx2 : &kScalar;

}  // namespace

Backend active_backend() { return g_backend; }

void force_backend(Backend b) {
  if (b == Backend::avx2 && !detail::avx2_available()) b = Backend::scalar;
  g_backend = b;
  g_vt = (b == Backend::avx2) ? &kAvx2 : &kScalar;
}

std::size_t argmax(const double* v, std::size_t n) {
  return g_vt->argmax(v, n);
}

double max_abs(const double* v, std::size_t n) { return g_vt->max_abs(v, n); }

void scatter_axpy(double a, const std::int32_t* idx, const double* val,
                  std::size_t k, double* dense) {
  g_vt->scatter_axpy(a, idx, val, k, dense);
}

double sparse_dot(const std::int32_t* idx, const double* val, std::size_t k,
                  const double* dense) {
  return g_vt->sparse_dot(idx, val, k, dense);
}

RatioHit min_ratio(const double* d, const double* x, const double* lo,
                   const double* hi, std::size_t n, double piv_tol,
                   double feas_tol) {
  return g_vt->min_ratio(d, x, lo, hi, n, piv_tol, feas_tol);
}

}  // namespace slicesim::kernels
