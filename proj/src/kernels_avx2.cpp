// AVX2 variants of the solver kernels.  Every function except sparse_dot is
// required to produce bit-identical results to its scalar reference,
// including tie-breaking on indices; sparse_dot reassociates the sum and is
// validated against the reference under a relative tolerance instead.
//
// This translation unit is compiled with -mavx2 when the toolchain targets
// x86-64 (see CMakeLists.txt); on other targets the functions forward to the
// scalar implementations so the symbols always exist.

#include "slicesim/kernels.hpp"

#include <cmath>
#include <limits>

#if defined(SLICESIM_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace slicesim::kernels::detail {

#if defined(SLICESIM_HAVE_AVX2)

bool avx2_available() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

std::size_t argmax_avx2(const double* v, std::size_t n) {
  if (n < 8) return argmax_scalar(v, n);

  __m256d vbest = _mm256_loadu_pd(v);
  __m256i vidx = _mm256_setr_epi64x(0, 1, 2, 3);
  const __m256i four = _mm256_set1_epi64x(4);
  __m256i cur = _mm256_setr_epi64x(4, 5, 6, 7);

  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(v + i);
    __m256d gt = _mm256_cmp_pd(x, vbest, _CMP_GT_OQ);
    vbest = _mm256_blendv_pd(vbest, x, gt);
    vidx = _mm256_castpd_si256(_mm256_blendv_pd(
        _mm256_castsi256_pd(vidx), _mm256_castsi256_pd(cur), gt));
    cur = _mm256_add_epi64(cur, four);
  }

  alignas(32) double bv[4];
  alignas(32) std::int64_t bi[4];
  _mm256_store_pd(bv, vbest);
  _mm256_store_si256(reinterpret_cast<__m256i*>(bi), vidx);

  double best = bv[0];
  std::int64_t best_i = bi[0];
  for (int l = 1; l < 4; ++l) {
    if (bv[l] > best || (bv[l] == best && bi[l] < best_i)) {
      best = bv[l];
      best_i = bi[l];
    }
  }
  for (; i < n; ++i) {
    if (v[i] > best) {
      best = v[i];
      best_i = static_cast<std::int64_t>(i);
    }
  }
  return static_cast<std::size_t>(best_i);
}

double max_abs_avx2(const double* v, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(v + i));
    acc = _mm256_max_pd(acc, x);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double m = lanes[0];
  for (int l = 1; l < 4; ++l)
    if (lanes[l] > m) m = lanes[l];
  for (; i < n; ++i) {
    double a = std::fabs(v[i]);
    if (a > m) m = a;
  }
  return m;
}

void scatter_axpy_avx2(double a, const std::int32_t* idx, const double* val,
                       std::size_t k, double* dense) {
  // Gather/compute/store four at a time.  Requires distinct indices within
  // the sparse vector (a CSC column never repeats a row), otherwise the
  // gathered values would miss earlier updates from the same batch.
  const __m256d va = _mm256_set1_pd(a);
  std::size_t t = 0;
  for (; t + 4 <= k; t += 4) {
    __m128i ix = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + t));
    __m256d dv = _mm256_i32gather_pd(dense, ix, 8);
    __m256d pv = _mm256_mul_pd(va, _mm256_loadu_pd(val + t));
    __m256d rv = _mm256_add_pd(dv, pv);
    alignas(32) double out[4];
    _mm256_store_pd(out, rv);
    dense[idx[t + 0]] = out[0];
    dense[idx[t + 1]] = out[1];
    dense[idx[t + 2]] = out[2];
    dense[idx[t + 3]] = out[3];
  }
  for (; t < k; ++t) dense[idx[t]] += a * val[t];
}

double sparse_dot_avx2(const std::int32_t* idx, const double* val,
                       std::size_t k, const double* dense) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 4 <= k; t += 4) {
    __m128i ix = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + t));
    __m256d dv = _mm256_i32gather_pd(dense, ix, 8);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + t), dv));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
  for (; t < k; ++t) s += val[t] * dense[idx[t]];
  return s;
}

RatioHit min_ratio_avx2(const double* d, const double* x, const double* lo,
                        const double* hi, std::size_t n, double piv_tol,
                        double feas_tol) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (n < 8) return min_ratio_scalar(d, x, lo, hi, n, piv_tol, feas_tol);

  const __m256d vpiv = _mm256_set1_pd(piv_tol);
  const __m256d vnpiv = _mm256_set1_pd(-piv_tol);
  const __m256d vfeas = _mm256_set1_pd(feas_tol);
  const __m256d vinf = _mm256_set1_pd(kInf);
  const __m256d vninf = _mm256_set1_pd(-kInf);
  const __m256d vzero = _mm256_setzero_pd();

  __m256d vbest = vinf;
  __m256i vidx = _mm256_set1_epi64x(-1);
  __m256i cur = _mm256_setr_epi64x(0, 1, 2, 3);
  const __m256i four = _mm256_set1_epi64x(4);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vd = _mm256_loadu_pd(d + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vl = _mm256_loadu_pd(lo + i);
    __m256d vh = _mm256_loadu_pd(hi + i);

    __m256d pos = _mm256_and_pd(_mm256_cmp_pd(vd, vpiv, _CMP_GT_OQ),
                                _mm256_cmp_pd(vl, vninf, _CMP_NEQ_OQ));
    __m256d neg = _mm256_and_pd(_mm256_cmp_pd(vd, vnpiv, _CMP_LT_OQ),
                                _mm256_cmp_pd(vh, vinf, _CMP_NEQ_OQ));

    __m256d step_pos =
        _mm256_div_pd(_mm256_add_pd(_mm256_sub_pd(vx, vl), vfeas), vd);
    __m256d step_neg =
        _mm256_div_pd(_mm256_sub_pd(_mm256_sub_pd(vx, vh), vfeas), vd);

    __m256d step = _mm256_blendv_pd(vinf, step_neg, neg);
    step = _mm256_blendv_pd(step, step_pos, pos);
    // Clamp exactly like the scalar code: only strictly negative steps are
    // replaced by +0.0 (so a -0.0 produced by the division is kept as-is).
    __m256d below = _mm256_cmp_pd(step, vzero, _CMP_LT_OQ);
    step = _mm256_blendv_pd(step, vzero, below);

    __m256d lt = _mm256_cmp_pd(step, vbest, _CMP_LT_OQ);
    vbest = _mm256_blendv_pd(vbest, step, lt);
    vidx = _mm256_castpd_si256(_mm256_blendv_pd(
        _mm256_castsi256_pd(vidx), _mm256_castsi256_pd(cur), lt));
    cur = _mm256_add_epi64(cur, four);
  }

  alignas(32) double bv[4];
  alignas(32) std::int64_t bi[4];
  _mm256_store_pd(bv, vbest);
  _mm256_store_si256(reinterpret_cast<__m256i*>(bi), vidx);

  RatioHit best{kInf, -1};
  for (int l = 0; l < 4; ++l) {
    if (bv[l] < best.step ||
        (bv[l] == best.step && bi[l] != -1 &&
         (best.index == -1 || bi[l] < best.index))) {
      best = {bv[l], bi[l]};
    }
  }
  for (; i < n; ++i) {
    double di = d[i];
    double step;
    if (di > piv_tol) {
      double b = lo[i];
      if (b == -kInf) continue;
      step = (x[i] - b + feas_tol) / di;
    } else if (di < -piv_tol) {
      double b = hi[i];
      if (b == kInf) continue;
      step = (x[i] - b - feas_tol) / di;
    } else {
      continue;
    }
    if (step < 0.0) step = 0.0;
    if (step < best.step) best = {step, static_cast<std::int64_t>(i)};
  }
  return best;
}

#else  // !SLICESIM_HAVE_AVX2

bool avx2_available() { return false; }

std::size_t argmax_avx2(const double* v, std::size_t n) {
  return argmax_scalar(v, n);
}
double max_abs_avx2(const double* v, std::size_t n) {
  return max_abs_scalar(v, n);
}
void scatter_axpy_avx2(double a, const std::int32_t* idx, const double* val,
                       std::size_t k, double* dense) {
  scatter_axpy_scalar(a, idx, val, k, dense);
}
double sparse_dot_avx2(const std::int32_t* idx, const double* val,
                       std::size_t k, const double* dense) {
  return sparse_dot_scalar(idx, val, k, dense);
}
RatioHit min_ratio_avx2(const double* d, const double* x, const double* lo,
                        const double* hi, std::size_t n, double piv_tol,
                        double feas_tol) {
  return min_ratio_scalar(d, x, lo, hi, n, piv_tol, feas_tol);
}

#endif  // SLICESIM_HAVE_AVX2

}  // namespace slicesim::kernels::detail
