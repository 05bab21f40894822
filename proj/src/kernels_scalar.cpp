#include "slicesim/kernels.hpp"

#include <cmath>
#include <limits>

namespace slicesim::kernels::detail {

std::size_t argmax_scalar(const double* v, std::size_t n) {
  if (n == 0) return static_cast<std::size_t>(-1);
  std::size_t best = 0;
  double bv = v[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > bv) {
      bv = v[i];
      best = i;
    }
  }
  return best;
}

double max_abs_scalar(const double* v, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::fabs(v[i]);
    if (a > m) m = a;
  }
  return m;
}

void scatter_axpy_scalar(double a, const std::int32_t* idx, const double* val,
                         std::size_t k, double* dense) {
  for (std::size_t t = 0; t < k; ++t) dense[idx[t]] += a * val[t];
}

double sparse_dot_scalar(const std::int32_t* idx, const double* val,
                         std::size_t k, const double* dense) {
  double s = 0.0;
  for (std::size_t t = 0; t < k; ++t) s += val[t] * dense[idx[t]];
  return s;
}

RatioHit min_ratio_scalar(const double* d, const double* x, const double* lo,
                          const double* hi, std::size_t n, double piv_tol,
                          double feas_tol) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  RatioHit best{kInf, -1};
  for (std::size_t i = 0; i < n; ++i) {
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

}  // namespace slicesim::kernels::detail
