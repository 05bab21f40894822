#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"
#include "slicesim/lp.hpp"
#include "slicesim/rng.hpp"

using slicesim::Rng;
using slicesim::ValidationError;
using namespace slicesim::lp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense per-column view of the structural matrix, duplicates summed.
std::vector<std::vector<double>> dense_columns(const Model& m) {
  std::vector<std::vector<double>> cols(
      static_cast<std::size_t>(m.num_cols()),
      std::vector<double>(static_cast<std::size_t>(m.num_rows()), 0.0));
  for (const auto& e : m.entries()) {
    cols[static_cast<std::size_t>(e.col)][static_cast<std::size_t>(e.row)] +=
        e.value;
  }
  return cols;
}

// Karush-Kuhn-Tucker conditions are sufficient for optimality of a linear
// program, so a clean report certifies the solution independently of the
// solver's own bookkeeping.
std::vector<std::string> kkt_violations(const Model& m, const LpResult& res,
                                        double ptol = 1e-6,
                                        double dtol = 1e-5) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& s) { out.push_back(s); };
  if (res.status != LpStatus::optimal) {
    bad("status is not optimal");
    return out;
  }
  const int n = m.num_cols(), rows = m.num_rows();
  if (static_cast<int>(res.x.size()) != n ||
      static_cast<int>(res.dual.size()) != rows ||
      static_cast<int>(res.reduced_cost.size()) != n) {
    bad("result vector sizes mismatch");
    return out;
  }
  auto cols = dense_columns(m);

  // Primal feasibility against column bounds.
  for (int j = 0; j < n; ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    double lo = m.col_lo()[js], hi = m.col_hi()[js], v = res.x[js];
    double s = std::max({1.0, std::fabs(lo), std::fabs(hi)});
    if (!std::isfinite(s)) s = std::max(1.0, std::fabs(v));
    if (std::isfinite(lo) && v < lo - ptol * s) {
      bad("col " + std::to_string(j) + " below lower bound");
    }
    if (std::isfinite(hi) && v > hi + ptol * s) {
      bad("col " + std::to_string(j) + " above upper bound");
    }
  }

  // Row activities recomputed from scratch.
  std::vector<double> act(static_cast<std::size_t>(rows), 0.0);
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < rows; ++r) {
      act[static_cast<std::size_t>(r)] +=
          cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)] *
          res.x[static_cast<std::size_t>(j)];
    }
  }
  for (int r = 0; r < rows; ++r) {
    const std::size_t rs = static_cast<std::size_t>(r);
    double lo = m.row_lo()[rs], hi = m.row_hi()[rs], v = act[rs];
    double s = std::max({1.0, std::fabs(lo), std::fabs(hi), std::fabs(v)});
    if (!std::isfinite(s)) s = std::max(1.0, std::fabs(v));
    if (std::fabs(v - res.row_activity[rs]) > ptol * s) {
      bad("row " + std::to_string(r) + " reported activity mismatch");
    }
    if (std::isfinite(lo) && v < lo - ptol * s) {
      bad("row " + std::to_string(r) + " below lower bound");
    }
    if (std::isfinite(hi) && v > hi + ptol * s) {
      bad("row " + std::to_string(r) + " above upper bound");
    }
  }

  // Dual feasibility / complementary slackness for rows: a multiplier may be
  // negative only where the upper bound is active, positive only where the
  // lower bound is active.
  for (int r = 0; r < rows; ++r) {
    const std::size_t rs = static_cast<std::size_t>(r);
    double lo = m.row_lo()[rs], hi = m.row_hi()[rs], v = act[rs];
    double y = res.dual[rs];
    double s = std::max({1.0, std::fabs(lo), std::fabs(hi), std::fabs(v)});
    if (!std::isfinite(s)) s = std::max(1.0, std::fabs(v));
    const bool at_lo = std::isfinite(lo) && v <= lo + ptol * s;
    const bool at_hi = std::isfinite(hi) && v >= hi - ptol * s;
    if (!at_lo && y > dtol) {
      bad("row " + std::to_string(r) + " positive dual off lower bound");
    }
    if (!at_hi && y < -dtol) {
      bad("row " + std::to_string(r) + " negative dual off upper bound");
    }
  }

  // Reduced costs: recomputed d_j = c_j - y.A_j must match the reported
  // value, vanish for interior variables, and have the sign that makes the
  // active bound optimal.
  for (int j = 0; j < n; ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    double d = m.obj()[js];
    for (int r = 0; r < rows; ++r) {
      d -= res.dual[static_cast<std::size_t>(r)] *
           cols[js][static_cast<std::size_t>(r)];
    }
    double s = std::max(1.0, std::fabs(m.obj()[js]));
    if (std::fabs(d - res.reduced_cost[js]) > dtol * s) {
      bad("col " + std::to_string(j) + " reported reduced cost mismatch");
    }
    double lo = m.col_lo()[js], hi = m.col_hi()[js], v = res.x[js];
    double bs = std::max({1.0, std::fabs(lo), std::fabs(hi)});
    if (!std::isfinite(bs)) bs = std::max(1.0, std::fabs(v));
    const bool at_lo = std::isfinite(lo) && v <= lo + ptol * bs;
    const bool at_hi = std::isfinite(hi) && v >= hi - ptol * bs;
    if (!at_lo && d > dtol * s) {
      bad("col " + std::to_string(j) + " positive reduced cost off lower");
    }
    if (!at_hi && d < -dtol * s) {
      bad("col " + std::to_string(j) + " negative reduced cost off upper");
    }
  }

  // Objective consistency.
  double obj = 0.0;
  for (int j = 0; j < n; ++j) {
    obj += m.obj()[static_cast<std::size_t>(j)] *
           res.x[static_cast<std::size_t>(j)];
  }
  if (std::fabs(obj - res.objective) > 1e-6 * std::max(1.0, std::fabs(obj))) {
    bad("objective mismatch");
  }
  return out;
}

void check_kkt(const Model& m, const LpResult& res) {
  auto v = kkt_violations(m, res);
  for (const auto& s : v) {
    CAPTURE(s);
    CHECK(false);
  }
  CHECK(v.empty());
}

// Exhaustive optimum for a small LP with all-finite bounds: every vertex of
// the (bounded, nonempty) feasible polytope is a basic solution over the
// matrix [A | -I], so enumerating all bases x all nonbasic bound choices and
// keeping the best feasible point is a complete oracle.
struct BruteResult {
  bool feasible = false;
  double objective = kInf;
};

BruteResult brute_force_lp(const Model& model) {
  const int m = model.num_rows();
  const int n = model.num_cols();
  const int ntot = n + m;
  REQUIRE(ntot <= 16);
  auto cols = dense_columns(model);
  auto col_of = [&](int j, int r) -> double {
    if (j < n) {
      return cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
    }
    return (j - n) == r ? -1.0 : 0.0;
  };
  auto lo_of = [&](int j) {
    return j < n ? model.col_lo()[static_cast<std::size_t>(j)]
                 : model.row_lo()[static_cast<std::size_t>(j - n)];
  };
  auto hi_of = [&](int j) {
    return j < n ? model.col_hi()[static_cast<std::size_t>(j)]
                 : model.row_hi()[static_cast<std::size_t>(j - n)];
  };

  BruteResult best;
  std::vector<int> bcols, ncols;
  std::vector<double> B, rhs, xb;
  std::vector<int> perm;
  for (std::uint32_t mask = 0; mask < (1u << ntot); ++mask) {
    if (std::popcount(mask) != m) continue;
    bcols.clear();
    ncols.clear();
    for (int j = 0; j < ntot; ++j) {
      if (mask & (1u << j)) {
        bcols.push_back(j);
      } else {
        ncols.push_back(j);
      }
    }
    const int k = static_cast<int>(ncols.size());
    for (std::uint32_t sub = 0; sub < (1u << k); ++sub) {
      // Right-hand side from nonbasics pinned at a bound each.
      rhs.assign(static_cast<std::size_t>(m), 0.0);
      for (int t = 0; t < k; ++t) {
        int j = ncols[static_cast<std::size_t>(t)];
        double v = (sub & (1u << t)) ? hi_of(j) : lo_of(j);
        for (int r = 0; r < m; ++r) {
          rhs[static_cast<std::size_t>(r)] -= col_of(j, r) * v;
        }
      }
      // Dense Gaussian elimination with partial pivoting.
      B.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
      for (int p = 0; p < m; ++p) {
        for (int r = 0; r < m; ++r) {
          B[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) +
            static_cast<std::size_t>(p)] =
              col_of(bcols[static_cast<std::size_t>(p)], r);
        }
      }
      bool singular = false;
      for (int c = 0; c < m && !singular; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r) {
          if (std::fabs(B[static_cast<std::size_t>(r * m + c)]) >
              std::fabs(B[static_cast<std::size_t>(piv * m + c)])) {
            piv = r;
          }
        }
        if (std::fabs(B[static_cast<std::size_t>(piv * m + c)]) < 1e-9) {
          singular = true;
          break;
        }
        if (piv != c) {
          for (int q = 0; q < m; ++q) {
            std::swap(B[static_cast<std::size_t>(c * m + q)],
                      B[static_cast<std::size_t>(piv * m + q)]);
          }
          std::swap(rhs[static_cast<std::size_t>(c)],
                    rhs[static_cast<std::size_t>(piv)]);
        }
        for (int r = c + 1; r < m; ++r) {
          double f = B[static_cast<std::size_t>(r * m + c)] /
                     B[static_cast<std::size_t>(c * m + c)];
          if (f == 0.0) continue;
          for (int q = c; q < m; ++q) {
            B[static_cast<std::size_t>(r * m + q)] -=
                f * B[static_cast<std::size_t>(c * m + q)];
          }
          rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(c)];
        }
      }
      if (singular) break;  // independent of the bound assignment
      xb.assign(static_cast<std::size_t>(m), 0.0);
      for (int r = m - 1; r >= 0; --r) {
        double v = rhs[static_cast<std::size_t>(r)];
        for (int q = r + 1; q < m; ++q) {
          v -= B[static_cast<std::size_t>(r * m + q)] *
               xb[static_cast<std::size_t>(q)];
        }
        xb[static_cast<std::size_t>(r)] =
            v / B[static_cast<std::size_t>(r * m + r)];
      }
      bool ok = true;
      for (int p = 0; p < m && ok; ++p) {
        int j = bcols[static_cast<std::size_t>(p)];
        double v = xb[static_cast<std::size_t>(p)];
        double s = std::max({1.0, std::fabs(lo_of(j)), std::fabs(hi_of(j))});
        if (v < lo_of(j) - 1e-7 * s || v > hi_of(j) + 1e-7 * s) ok = false;
      }
      if (!ok) continue;
      double obj = 0.0;
      for (int t = 0; t < k; ++t) {
        int j = ncols[static_cast<std::size_t>(t)];
        if (j < n) {
          double v = (sub & (1u << t)) ? hi_of(j) : lo_of(j);
          obj += model.obj()[static_cast<std::size_t>(j)] * v;
        }
      }
      for (int p = 0; p < m; ++p) {
        int j = bcols[static_cast<std::size_t>(p)];
        if (j < n) {
          obj += model.obj()[static_cast<std::size_t>(j)] *
                 xb[static_cast<std::size_t>(p)];
        }
      }
      best.feasible = true;
      best.objective = std::min(best.objective, obj);
    }
  }
  return best;
}

Model transportation_lp(int supplies, int demands, Rng& rng,
                        double surplus = 5.0) {
  Model m;
  std::vector<double> b(static_cast<std::size_t>(demands));
  double total = 0.0;
  for (auto& v : b) {
    v = std::floor(rng.uniform(1.0, 9.0) * 4.0) / 4.0;
    total += v;
  }
  std::vector<double> a(static_cast<std::size_t>(supplies));
  double left = total + surplus;
  for (int i = 0; i < supplies; ++i) {
    double share = left / (supplies - i);
    a[static_cast<std::size_t>(i)] =
        std::floor(share * rng.uniform(0.8, 1.2) * 4.0) / 4.0;
    left -= a[static_cast<std::size_t>(i)];
  }
  a[0] += std::max(0.0, left);  // keep total supply >= total demand

  std::vector<int> supply_rows, demand_rows;
  for (int i = 0; i < supplies; ++i) {
    supply_rows.push_back(m.add_row(-kInf, a[static_cast<std::size_t>(i)]));
  }
  for (int j = 0; j < demands; ++j) {
    demand_rows.push_back(m.add_row(b[static_cast<std::size_t>(j)],
                                    b[static_cast<std::size_t>(j)]));
  }
  for (int i = 0; i < supplies; ++i) {
    for (int j = 0; j < demands; ++j) {
      double cost = std::floor(rng.uniform(1.0, 20.0) * 4.0) / 4.0;
      int col = m.add_col(cost, 0.0, kInf);
      m.add_entry(supply_rows[static_cast<std::size_t>(i)], col, 1.0);
      m.add_entry(demand_rows[static_cast<std::size_t>(j)], col, 1.0);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("lp: two-variable packing reaches the joint capacity") {
  Model m;
  int x = m.add_col(-1.0, 0.0, 1.0);
  int y = m.add_col(-1.0, 0.0, 1.0);
  int r = m.add_row(-kInf, 1.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(res.x[0] + res.x[1] == doctest::Approx(1.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: equality row with a side cap") {
  Model m;
  int x = m.add_col(1.0, 0.0, 10.0);
  int y = m.add_col(2.0, 0.0, 10.0);
  int bal = m.add_row(10.0, 10.0);
  m.add_entry(bal, x, 1.0);
  m.add_entry(bal, y, 1.0);
  int cap = m.add_row(-kInf, 4.0);
  m.add_entry(cap, x, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(res.x[static_cast<std::size_t>(x)] ==
        doctest::Approx(4.0).epsilon(1e-9));
  CHECK(res.x[static_cast<std::size_t>(y)] ==
        doctest::Approx(6.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: slack capacity is solved by bound flips alone") {
  Model m;
  int x = m.add_col(-1.0, 0.0, 5.0);
  int y = m.add_col(-2.0, 0.0, 7.0);
  int r = m.add_row(-kInf, 100.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(-19.0).epsilon(1e-12));
  CHECK(res.x[static_cast<std::size_t>(x)] == 5.0);
  CHECK(res.x[static_cast<std::size_t>(y)] == 7.0);
  check_kkt(m, res);
}

TEST_CASE("lp: free variable pinned by an equality") {
  Model m;
  int x = m.add_col(1.0, -kInf, kInf);
  int y = m.add_col(0.0, 0.0, 1.0);
  int r = m.add_row(3.0, 3.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.x[static_cast<std::size_t>(x)] ==
        doctest::Approx(2.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: negative bounds and a lower-bounded row") {
  Model m;
  int x = m.add_col(1.0, -5.0, 5.0);
  int r = m.add_row(-3.0, kInf);
  m.add_entry(r, x, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(-3.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: equality forcing a negative-shifted solution") {
  Model m;
  int x = m.add_col(1.0, 0.0, 1.0);
  int y = m.add_col(1.0, 0.0, 3.0);
  int r = m.add_row(-2.0, -2.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, -1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.x[static_cast<std::size_t>(x)] ==
        doctest::Approx(0.0).epsilon(1e-7));
  CHECK(res.x[static_cast<std::size_t>(y)] ==
        doctest::Approx(2.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: pure feasibility with zero objective") {
  Model m;
  int x = m.add_col(0.0, 0.0, 1.0);
  int y = m.add_col(0.0, 0.0, 1.0);
  int r = m.add_row(1.0, kInf);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(0.0));
  CHECK(res.x[0] + res.x[1] >= 1.0 - 1e-7);
  check_kkt(m, res);
}

TEST_CASE("lp: infeasible box against a demanding row") {
  Model m;
  int x = m.add_col(1.0, 0.0, 1.0);
  int r = m.add_row(2.0, kInf);
  m.add_entry(r, x, 1.0);
  auto res = solve_lp(m);
  CHECK(res.status == LpStatus::infeasible);
}

TEST_CASE("lp: contradictory ranged rows are infeasible") {
  Model m;
  int x = m.add_col(0.0, 0.0, 1.0);
  int y = m.add_col(0.0, 0.0, 1.0);
  int r = m.add_row(3.0, 4.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, 1.0);
  auto res = solve_lp(m);
  CHECK(res.status == LpStatus::infeasible);
}

TEST_CASE("lp: unbounded ray is detected") {
  Model m;
  int x = m.add_col(-1.0, 0.0, kInf);
  int y = m.add_col(0.0, 0.0, kInf);
  int r = m.add_row(-kInf, 0.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, y, -1.0);
  auto res = solve_lp(m);
  CHECK(res.status == LpStatus::unbounded);
}

TEST_CASE("lp: rowless model resolves on bounds") {
  Model m;
  m.add_col(2.0, -1.0, 4.0);
  m.add_col(-3.0, 0.0, 2.5);
  m.add_col(0.0, 1.5, 9.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.x[0] == -1.0);
  CHECK(res.x[1] == 2.5);
  CHECK(res.x[2] == 1.5);
  CHECK(res.objective == doctest::Approx(-2.0 - 7.5).epsilon(1e-12));

  Model mu;
  mu.add_col(-1.0, 0.0, kInf);
  CHECK(solve_lp(mu).status == LpStatus::unbounded);
}

TEST_CASE("lp: empty model is trivially optimal") {
  Model m;
  auto res = solve_lp(m);
  CHECK(res.status == LpStatus::optimal);
  CHECK(res.objective == 0.0);
}

TEST_CASE("lp: rows without columns decide feasibility by sign") {
  Model ok;
  ok.add_row(-1.0, 1.0);
  CHECK(solve_lp(ok).status == LpStatus::optimal);

  Model bad;
  bad.add_row(2.0, 3.0);
  CHECK(solve_lp(bad).status == LpStatus::infeasible);
}

TEST_CASE("lp: duplicate coefficients are summed") {
  Model m;
  int x = m.add_col(-1.0, 0.0, 5.0);
  int r = m.add_row(-kInf, 2.0);
  m.add_entry(r, x, 0.25);
  m.add_entry(r, x, 0.75);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.x[static_cast<std::size_t>(x)] ==
        doctest::Approx(2.0).epsilon(1e-9));

  Model z;
  int xz = z.add_col(1.0, -1.0, 5.0);
  int rz = z.add_row(-10.0, 10.0);
  z.add_entry(rz, xz, 1.0);
  z.add_entry(rz, xz, -1.0);
  auto rres = solve_lp(z);
  REQUIRE(rres.status == LpStatus::optimal);
  CHECK(rres.x[0] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("lp: fixed columns act as constants") {
  Model m;
  int x = m.add_col(1.0, 0.0, 10.0);
  int w = m.add_col(5.0, 2.0, 2.0);
  int r = m.add_row(6.0, 6.0);
  m.add_entry(r, x, 1.0);
  m.add_entry(r, w, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.x[static_cast<std::size_t>(w)] == doctest::Approx(2.0));
  CHECK(res.x[static_cast<std::size_t>(x)] ==
        doctest::Approx(4.0).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(14.0).epsilon(1e-9));
  check_kkt(m, res);
}

// Classic degenerate instance that cycles under naive most-negative pricing.
TEST_CASE("lp: degenerate cycling-prone instance terminates at the optimum") {
  Model m;
  int x1 = m.add_col(-0.75, 0.0, kInf);
  int x2 = m.add_col(150.0, 0.0, kInf);
  int x3 = m.add_col(-0.02, 0.0, kInf);
  int x4 = m.add_col(6.0, 0.0, kInf);
  int r1 = m.add_row(-kInf, 0.0);
  m.add_entry(r1, x1, 0.25);
  m.add_entry(r1, x2, -60.0);
  m.add_entry(r1, x3, -0.04);
  m.add_entry(r1, x4, 9.0);
  int r2 = m.add_row(-kInf, 0.0);
  m.add_entry(r2, x1, 0.5);
  m.add_entry(r2, x2, -90.0);
  m.add_entry(r2, x3, -0.02);
  m.add_entry(r2, x4, 3.0);
  int r3 = m.add_row(-kInf, 1.0);
  m.add_entry(r3, x3, 1.0);
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(-0.05).epsilon(1e-9));
  CHECK(res.iterations < 10000);
  check_kkt(m, res);
}

// Worst-case vertex walk for greedy pricing; checks sustained pivoting.
TEST_CASE("lp: steep corner chain reaches the far vertex") {
  Model m;
  const int n = 5;
  std::vector<int> xs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(m.add_col(-std::ldexp(1.0, n - 1 - i), 0.0, kInf));
  }
  for (int i = 0; i < n; ++i) {
    int r = m.add_row(-kInf, std::pow(5.0, i + 1));
    for (int j = 0; j < i; ++j) {
      m.add_entry(r, xs[static_cast<std::size_t>(j)],
                  std::ldexp(1.0, i + 1 - j));
    }
    m.add_entry(r, xs[static_cast<std::size_t>(i)], 1.0);
  }
  auto res = solve_lp(m);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(-3125.0).epsilon(1e-9));
  check_kkt(m, res);
}

TEST_CASE("lp: iteration limit reports without crashing") {
  Rng rng(99);
  Model m = transportation_lp(4, 6, rng);
  SolverOptions opts;
  opts.max_iters = 1;
  auto res = solve_lp(m, opts);
  CHECK(res.status == LpStatus::iteration_limit);
}

TEST_CASE("lp: transportation instances satisfy the optimality certificate") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    Model m = transportation_lp(6, 12, rng);
    auto res = solve_lp(m);
    REQUIRE(res.status == LpStatus::optimal);
    check_kkt(m, res);
  }
}

TEST_CASE("lp: infeasible when demand exceeds supply") {
  Rng rng(3);
  Model m = transportation_lp(5, 9, rng, /*surplus=*/-20.0);
  // Force the shortfall: shrink every supply cap below the demand total.
  Model tight;
  double demand_total = 0.0;
  for (int r = 0; r < m.num_rows(); ++r) {
    const std::size_t rs = static_cast<std::size_t>(r);
    if (m.row_lo()[rs] == m.row_hi()[rs]) demand_total += m.row_lo()[rs];
  }
  for (int r = 0; r < m.num_rows(); ++r) {
    const std::size_t rs = static_cast<std::size_t>(r);
    if (m.row_lo()[rs] == m.row_hi()[rs]) {
      tight.add_row(m.row_lo()[rs], m.row_hi()[rs]);
    } else {
      tight.add_row(m.row_lo()[rs], demand_total / 10.0);
    }
  }
  for (int j = 0; j < m.num_cols(); ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    tight.add_col(m.obj()[js], m.col_lo()[js], m.col_hi()[js]);
  }
  for (const auto& e : m.entries()) tight.add_entry(e.row, e.col, e.value);
  auto res = solve_lp(tight);
  CHECK(res.status == LpStatus::infeasible);
}

TEST_CASE("lp: randomized instances match the exhaustive vertex oracle") {
  Rng rng(0xBEEFu);
  int optimal_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 250; ++trial) {
    CAPTURE(trial);
    const int m = 1 + static_cast<int>(rng.next_below(3));
    const int n = 1 + static_cast<int>(rng.next_below(4));
    Model model;
    for (int r = 0; r < m; ++r) {
      double lo = std::floor(rng.uniform(-4.0, 1.0) * 4.0) / 4.0;
      double width = std::floor(rng.uniform(0.0, 5.0) * 4.0) / 4.0;
      model.add_row(lo, lo + width);
    }
    for (int j = 0; j < n; ++j) {
      double c = std::floor(rng.uniform(-3.0, 3.0) * 4.0) / 4.0;
      double lo = std::floor(rng.uniform(-2.0, 1.0) * 4.0) / 4.0;
      double width = std::floor(rng.uniform(0.0, 3.0) * 4.0) / 4.0;
      model.add_col(c, lo, lo + width);
    }
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < n; ++j) {
        if (rng.next_double() < 0.7) {
          double v = std::floor(rng.uniform(-3.0, 3.0) * 4.0) / 4.0;
          if (v != 0.0) model.add_entry(r, j, v);
        }
      }
    }
    auto expect = brute_force_lp(model);
    auto res = solve_lp(model);
    if (expect.feasible) {
      REQUIRE(res.status == LpStatus::optimal);
      CHECK(res.objective ==
            doctest::Approx(expect.objective)
                .epsilon(1e-6)
                .scale(std::max(1.0, std::fabs(expect.objective))));
      check_kkt(model, res);
      ++optimal_seen;
    } else {
      REQUIRE(res.status == LpStatus::infeasible);
      ++infeasible_seen;
    }
  }
  // The sweep must genuinely exercise both outcomes.
  CHECK(optimal_seen >= 50);
  CHECK(infeasible_seen >= 20);
}

TEST_CASE("lp: repeated solves are bitwise identical") {
  Rng rng(0xD5u);
  Model m = transportation_lp(6, 10, rng);
  auto a = solve_lp(m);
  auto b = solve_lp(m);
  REQUIRE(a.status == b.status);
  CHECK(std::bit_cast<std::uint64_t>(a.objective) ==
        std::bit_cast<std::uint64_t>(b.objective));
  REQUIRE(a.x.size() == b.x.size());
  for (std::size_t j = 0; j < a.x.size(); ++j) {
    CHECK(std::bit_cast<std::uint64_t>(a.x[j]) ==
          std::bit_cast<std::uint64_t>(b.x[j]));
  }
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("lp: scalar and vectorized backends agree on the optimum") {
  namespace k = slicesim::kernels;
  Rng rng(0xACEu);
  Model m = transportation_lp(7, 11, rng);
  const k::Backend prev = k::active_backend();
  k::force_backend(k::Backend::scalar);
  auto rs = solve_lp(m);
  LpResult rv;
  bool ran_avx2 = false;
  if (k::detail::avx2_available()) {
    k::force_backend(k::Backend::avx2);
    rv = solve_lp(m);
    ran_avx2 = true;
  }
  k::force_backend(prev);
  REQUIRE(rs.status == LpStatus::optimal);
  if (ran_avx2) {
    REQUIRE(rv.status == LpStatus::optimal);
    CHECK(rv.objective ==
          doctest::Approx(rs.objective)
              .epsilon(1e-9)
              .scale(std::max(1.0, std::fabs(rs.objective))));
  }
}

TEST_CASE("lp: model validation rejects malformed input") {
  Model nanb;
  nanb.add_col(1.0, 0.0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(solve_lp(nanb), ValidationError);

  Model inverted;
  inverted.add_col(1.0, 2.0, 1.0);
  CHECK_THROWS_AS(solve_lp(inverted), ValidationError);

  Model badrow;
  badrow.add_col(1.0, 0.0, 1.0);
  badrow.add_row(5.0, 4.0);
  CHECK_THROWS_AS(solve_lp(badrow), ValidationError);

  Model oob;
  oob.add_col(1.0, 0.0, 1.0);
  oob.add_row(0.0, 1.0);
  oob.add_entry(1, 0, 1.0);
  CHECK_THROWS_AS(solve_lp(oob), ValidationError);

  Model infc;
  infc.add_col(1.0, 0.0, 1.0);
  infc.add_row(0.0, 1.0);
  infc.add_entry(0, 0, kInf);
  CHECK_THROWS_AS(solve_lp(infc), ValidationError);

  Model nanobj;
  nanobj.add_col(std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0);
  CHECK_THROWS_AS(solve_lp(nanobj), ValidationError);
}

TEST_CASE("lp: text export matches the reference layout") {
  Model m;
  m.add_col(1.0, 0.0, 4.0);      // x
  m.add_col(2.0, 0.0, kInf);     // y
  m.add_col(0.0, -kInf, kInf);   // z
  m.add_col(-1.5, 3.0, 3.0);     // w
  int bal = m.add_row(10.0, 10.0);
  m.add_entry(bal, 0, 1.0);
  m.add_entry(bal, 1, 1.0);
  int capa = m.add_row(-kInf, 5.0);
  m.add_entry(capa, 0, 1.0);
  m.add_entry(capa, 2, -1.0);
  int rngb = m.add_row(1.0, 7.0);
  m.add_entry(rngb, 1, 1.0);
  m.add_entry(rngb, 2, 2.0);

  std::string text = write_lp_text(m, {"x", "y", "z", "w"},
                                   {"bal", "capA", "rngB"}, {0});
  const std::string expected =
      "Minimize\n"
      " obj: 1 x + 2 y - 1.5 w\n"
      "Subject To\n"
      " bal: 1 x + 1 y = 10\n"
      " capA: 1 x - 1 z <= 5\n"
      " rngB_hi: 1 y + 2 z <= 7\n"
      " rngB_lo: 1 y + 2 z >= 1\n"
      "Bounds\n"
      " 0 <= x <= 4\n"
      " y >= 0\n"
      " z free\n"
      " w = 3\n"
      "Binary\n"
      " x\n"
      "End\n";
  CHECK(text == expected);

  CHECK_THROWS_AS(write_lp_text(m, {"x"}, {"a", "b", "c"}, {}),
                  ValidationError);
}
