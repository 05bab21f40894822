#pragma once

#include <cstddef>
#include <cstdint>

// Hot inner loops of the simplex engine. Every operation has a scalar
// reference implementation and an AVX2 variant; the backend is chosen once at
// runtime (override with SLICESIM_KERNELS=scalar|avx2). Except for sparse_dot,
// whose SIMD variant reassociates its accumulation, the variants are
// bit-identical to the scalar reference, including index tie-breaking.
namespace slicesim::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
void force_backend(Backend b);  // for equivalence tests

// Index of the maximum element; exact ties resolve to the lowest index.
// n == 0 returns SIZE_MAX. Inputs must be NaN-free.
std::size_t argmax(const double* v, std::size_t n);

// Largest |v[i]|; 0 for n == 0.
double max_abs(const double* v, std::size_t n);

// dense[idx[t]] += a * val[t] for t in [0,k). Indices must be distinct.
void scatter_axpy(double a, const std::int32_t* idx, const double* val,
                  std::size_t k, double* dense);

// Sum of val[t] * dense[idx[t]].
double sparse_dot(const std::int32_t* idx, const double* val, std::size_t k,
                  const double* dense);

// Bounded-variable simplex ratio test over the basic values. Movement model:
// x[i] decreases at rate d[i] per unit step. A positive d[i] drives x[i]
// toward lo[i], a negative one toward hi[i]; rates with |d[i]| <= piv_tol are
// ignored, as are infinite bounds. Each eligible row yields the step at which
// x[i] reaches the bound relaxed by feas_tol; returns the smallest step
// (clamped at >= 0) and its row, lowest row on exact ties. index == -1 means
// no row blocks.
struct RatioHit {
  double step;
  std::int64_t index;
};
RatioHit min_ratio(const double* d, const double* x, const double* lo,
                   const double* hi, std::size_t n, double piv_tol,
                   double feas_tol);

namespace detail {
std::size_t argmax_scalar(const double* v, std::size_t n);
double max_abs_scalar(const double* v, std::size_t n);
void scatter_axpy_scalar(double a, const std::int32_t* idx, const double* val,
                         std::size_t k, double* dense);
double sparse_dot_scalar(const std::int32_t* idx, const double* val,
                         std::size_t k, const double* dense);
RatioHit min_ratio_scalar(const double* d, const double* x, const double* lo,
                          const double* hi, std::size_t n, double piv_tol,
                          double feas_tol);

bool avx2_available();
std::size_t argmax_avx2(const double* v, std::size_t n);
double max_abs_avx2(const double* v, std::size_t n);
void scatter_axpy_avx2(double a, const std::int32_t* idx, const double* val,
                       std::size_t k, double* dense);
double sparse_dot_avx2(const std::int32_t* idx, const double* val,
                       std::size_t k, const double* dense);
RatioHit min_ratio_avx2(const double* d, const double* x, const double* lo,
                        const double* hi, std::size_t n, double piv_tol,
                        double feas_tol);
}  // namespace detail

}  // namespace slicesim::kernels
