#include "slicesim/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"

namespace slicesim::lp {

int Model::add_col(double obj, double lo, double hi) {
  obj_.push_back(obj);
  col_lo_.push_back(lo);
  col_hi_.push_back(hi);
  return static_cast<int>(obj_.size()) - 1;
}

int Model::add_row(double lo, double hi) {
  row_lo_.push_back(lo);
  row_hi_.push_back(hi);
  return static_cast<int>(row_lo_.size()) - 1;
}

void Model::add_entry(int row, int col, double coeff) {
  entries_.push_back({static_cast<std::int32_t>(row),
                      static_cast<std::int32_t>(col), coeff});
}

void Model::set_col_bounds(int col, double lo, double hi) {
  col_lo_[static_cast<std::size_t>(col)] = lo;
  col_hi_[static_cast<std::size_t>(col)] = hi;
}

void Model::validate() const {
  for (int j = 0; j < num_cols(); ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    if (!std::isfinite(obj_[js])) {
      throw ValidationError("lp: non-finite objective on column " +
                            std::to_string(j));
    }
    if (std::isnan(col_lo_[js]) || std::isnan(col_hi_[js]) ||
        col_lo_[js] > col_hi_[js]) {
      throw ValidationError("lp: bad bounds on column " + std::to_string(j));
    }
  }
  for (int r = 0; r < num_rows(); ++r) {
    const std::size_t rs = static_cast<std::size_t>(r);
    if (std::isnan(row_lo_[rs]) || std::isnan(row_hi_[rs]) ||
        row_lo_[rs] > row_hi_[rs]) {
      throw ValidationError("lp: bad bounds on row " + std::to_string(r));
    }
  }
  for (const auto& e : entries_) {
    if (e.row < 0 || e.row >= num_rows() || e.col < 0 || e.col >= num_cols()) {
      throw ValidationError("lp: coefficient index out of range");
    }
    if (!std::isfinite(e.value)) {
      throw ValidationError("lp: non-finite coefficient at row " +
                            std::to_string(e.row) + ", col " +
                            std::to_string(e.col));
    }
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRatioPivTol = 1e-9;   // rates below this never block
constexpr double kPivotAccept = 1e-8;   // refactor rather than pivot below this
constexpr double kDegenStep = 1e-10;    // steps below this count as stalling

// Compressed sparse columns of the structural matrix, duplicates summed.
struct Csc {
  int n = 0;
  int m = 0;
  std::vector<std::int64_t> start;  // n + 1
  std::vector<std::int32_t> row;
  std::vector<double> val;
};

Csc build_csc(const Model& model) {
  Csc csc;
  csc.n = model.num_cols();
  csc.m = model.num_rows();

  std::vector<Model::Entry> ents = model.entries();
  std::sort(ents.begin(), ents.end(),
            [](const Model::Entry& a, const Model::Entry& b) {
              return a.col != b.col ? a.col < b.col : a.row < b.row;
            });

  csc.start.assign(static_cast<std::size_t>(csc.n) + 1, 0);
  csc.row.reserve(ents.size());
  csc.val.reserve(ents.size());
  std::size_t i = 0;
  for (int j = 0; j < csc.n; ++j) {
    csc.start[static_cast<std::size_t>(j)] =
        static_cast<std::int64_t>(csc.row.size());
    while (i < ents.size() && ents[i].col == j) {
      std::int32_t r = ents[i].row;
      double v = 0.0;
      while (i < ents.size() && ents[i].col == j && ents[i].row == r) {
        v += ents[i].value;
        ++i;
      }
      if (v != 0.0) {
        csc.row.push_back(r);
        csc.val.push_back(v);
      }
    }
  }
  csc.start[static_cast<std::size_t>(csc.n)] =
      static_cast<std::int64_t>(csc.row.size());
  return csc;
}

struct SingularBasis {};

// Sparse LU with partial pivoting, built column by column with
// reach-set/topological-order triangular solves. L has an implicit unit
// diagonal and original row indices; U is stored by columns over pivot
// positions with a separate diagonal.
class LuFactor {
 public:
  // col_of(p, emit) must call emit(row, value) for basis column p.
  template <typename ColFn>
  void factor(int m, ColFn&& col_of) {
    m_ = m;
    const std::size_t mu = static_cast<std::size_t>(m);
    lstart_.assign(1, 0);
    lrow_.clear();
    lval_.clear();
    ustart_.assign(1, 0);
    upos_.clear();
    uval_.clear();
    udiag_.assign(mu, 0.0);
    prow_.assign(mu, -1);
    pinv_.assign(mu, -1);
    if (pos_mark_.size() != mu) pos_mark_.assign(mu, 0);

    std::vector<double> x(mu, 0.0);
    std::vector<char> seen(mu, 0);
    std::vector<std::int32_t> touched;
    std::vector<std::int32_t> topo;
    struct Frame {
      std::int32_t pos;
      std::int64_t next;
    };
    std::vector<Frame> stack;
    touched.reserve(mu);
    topo.reserve(mu);

    auto cleanup = [&] {
      for (std::int32_t r : touched) {
        x[static_cast<std::size_t>(r)] = 0.0;
        seen[static_cast<std::size_t>(r)] = 0;
      }
      for (std::int32_t p : topo) pos_mark_[static_cast<std::size_t>(p)] = 0;
    };

    for (int j = 0; j < m; ++j) {
      touched.clear();
      topo.clear();

      col_of(j, [&](std::int32_t r, double v) {
        x[static_cast<std::size_t>(r)] += v;
        if (!seen[static_cast<std::size_t>(r)]) {
          seen[static_cast<std::size_t>(r)] = 1;
          touched.push_back(r);
        }
      });

      // Depth-first walk over already-pivoted positions reachable from the
      // column pattern; post-order gives reverse topological order.
      const std::size_t initial = touched.size();
      for (std::size_t t = 0; t < initial; ++t) {
        std::int32_t p0 = pinv_[static_cast<std::size_t>(touched[t])];
        if (p0 < 0 || pos_mark_[static_cast<std::size_t>(p0)]) continue;
        pos_mark_[static_cast<std::size_t>(p0)] = 1;
        stack.push_back({p0, lstart_[static_cast<std::size_t>(p0)]});
        while (!stack.empty()) {
          Frame& f = stack.back();
          if (f.next == lstart_[static_cast<std::size_t>(f.pos) + 1]) {
            topo.push_back(f.pos);
            stack.pop_back();
            continue;
          }
          std::int32_t r = lrow_[static_cast<std::size_t>(f.next++)];
          if (!seen[static_cast<std::size_t>(r)]) {
            seen[static_cast<std::size_t>(r)] = 1;
            touched.push_back(r);
          }
          std::int32_t p = pinv_[static_cast<std::size_t>(r)];
          if (p >= 0 && !pos_mark_[static_cast<std::size_t>(p)]) {
            pos_mark_[static_cast<std::size_t>(p)] = 1;
            stack.push_back({p, lstart_[static_cast<std::size_t>(p)]});
          }
        }
      }

      // Numeric solve in topological (parents-first) order.
      for (std::size_t t = topo.size(); t-- > 0;) {
        std::int32_t p = topo[t];
        double v =
            x[static_cast<std::size_t>(prow_[static_cast<std::size_t>(p)])];
        if (v != 0.0) {
          std::int64_t b = lstart_[static_cast<std::size_t>(p)];
          std::int64_t e = lstart_[static_cast<std::size_t>(p) + 1];
          kernels::scatter_axpy(-v, lrow_.data() + b, lval_.data() + b,
                                static_cast<std::size_t>(e - b), x.data());
        }
      }

      // Pivot: largest magnitude among unpivoted touched rows, lowest row
      // index on exact ties.
      std::int32_t piv_row = -1;
      double piv_abs = 0.0;
      for (std::int32_t r : touched) {
        if (pinv_[static_cast<std::size_t>(r)] >= 0) continue;
        double a = std::fabs(x[static_cast<std::size_t>(r)]);
        if (a > piv_abs || (a == piv_abs && a > 0.0 && r < piv_row)) {
          piv_abs = a;
          piv_row = r;
        }
      }
      if (piv_row < 0 || piv_abs < 1e-11) {
        cleanup();
        throw SingularBasis{};
      }
      const double piv = x[static_cast<std::size_t>(piv_row)];

      // U column j: values at already-pivoted rows, by position.
      for (std::size_t t = topo.size(); t-- > 0;) {
        std::int32_t p = topo[t];
        double v =
            x[static_cast<std::size_t>(prow_[static_cast<std::size_t>(p)])];
        if (v != 0.0) {
          upos_.push_back(p);
          uval_.push_back(v);
        }
      }
      ustart_.push_back(static_cast<std::int64_t>(upos_.size()));
      udiag_[static_cast<std::size_t>(j)] = piv;

      // L column j: remaining unpivoted rows, scaled by the pivot.
      for (std::int32_t r : touched) {
        if (pinv_[static_cast<std::size_t>(r)] >= 0 || r == piv_row) continue;
        double v = x[static_cast<std::size_t>(r)];
        if (v != 0.0) {
          lrow_.push_back(r);
          lval_.push_back(v / piv);
        }
      }
      lstart_.push_back(static_cast<std::int64_t>(lrow_.size()));

      prow_[static_cast<std::size_t>(j)] = piv_row;
      pinv_[static_cast<std::size_t>(piv_row)] = j;
      cleanup();
    }
  }

  // v: dense right-hand side in row space; on return, solution per basis
  // position.
  void ftran(std::vector<double>& v) const {
    out_.assign(static_cast<std::size_t>(m_), 0.0);
    for (int p = 0; p < m_; ++p) {
      double val =
          v[static_cast<std::size_t>(prow_[static_cast<std::size_t>(p)])];
      if (val != 0.0) {
        std::int64_t b = lstart_[static_cast<std::size_t>(p)];
        std::int64_t e = lstart_[static_cast<std::size_t>(p) + 1];
        kernels::scatter_axpy(-val, lrow_.data() + b, lval_.data() + b,
                              static_cast<std::size_t>(e - b), v.data());
      }
    }
    for (int q = m_ - 1; q >= 0; --q) {
      double val =
          v[static_cast<std::size_t>(prow_[static_cast<std::size_t>(q)])];
      if (val == 0.0) continue;
      double xq = val / udiag_[static_cast<std::size_t>(q)];
      out_[static_cast<std::size_t>(q)] = xq;
      std::int64_t b = ustart_[static_cast<std::size_t>(q)];
      std::int64_t e = ustart_[static_cast<std::size_t>(q) + 1];
      for (std::int64_t k = b; k < e; ++k) {
        std::int32_t p = upos_[static_cast<std::size_t>(k)];
        v[static_cast<std::size_t>(prow_[static_cast<std::size_t>(p)])] -=
            uval_[static_cast<std::size_t>(k)] * xq;
      }
    }
    v = out_;
  }

  // v: dense cost per basis position; on return, multiplier per row.
  void btran(std::vector<double>& v) const {
    for (int q = 0; q < m_; ++q) {
      std::int64_t b = ustart_[static_cast<std::size_t>(q)];
      std::int64_t e = ustart_[static_cast<std::size_t>(q) + 1];
      double s = kernels::sparse_dot(upos_.data() + b, uval_.data() + b,
                                     static_cast<std::size_t>(e - b), v.data());
      v[static_cast<std::size_t>(q)] = (v[static_cast<std::size_t>(q)] - s) /
                                       udiag_[static_cast<std::size_t>(q)];
    }
    out_.assign(static_cast<std::size_t>(m_), 0.0);
    for (int p = m_ - 1; p >= 0; --p) {
      std::int64_t b = lstart_[static_cast<std::size_t>(p)];
      std::int64_t e = lstart_[static_cast<std::size_t>(p) + 1];
      double s =
          kernels::sparse_dot(lrow_.data() + b, lval_.data() + b,
                              static_cast<std::size_t>(e - b), out_.data());
      out_[static_cast<std::size_t>(prow_[static_cast<std::size_t>(p)])] =
          v[static_cast<std::size_t>(p)] - s;
    }
    v = out_;
  }

 private:
  int m_ = 0;
  std::vector<std::int64_t> lstart_;
  std::vector<std::int32_t> lrow_;
  std::vector<double> lval_;
  std::vector<std::int64_t> ustart_;
  std::vector<std::int32_t> upos_;
  std::vector<double> uval_;
  std::vector<double> udiag_;
  std::vector<std::int32_t> prow_;
  std::vector<std::int32_t> pinv_;
  mutable std::vector<char> pos_mark_;
  mutable std::vector<double> out_;
};

enum VarStatus : std::uint8_t { kBasic, kAtLo, kAtHi, kFreeNb };

class Simplex {
 public:
  Simplex(const Model& model, const SolverOptions& opts)
      : opts_(opts), csc_(build_csc(model)) {
    n_ = csc_.n;
    m_ = csc_.m;
    ntot_ = n_ + m_;
    const std::size_t nt = static_cast<std::size_t>(ntot_);
    cost_.assign(nt, 0.0);
    lo_.assign(nt, 0.0);
    hi_.assign(nt, 0.0);
    for (int j = 0; j < n_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      cost_[js] = model.obj()[js];
      lo_[js] = model.col_lo()[js];
      hi_[js] = model.col_hi()[js];
    }
    for (int r = 0; r < m_; ++r) {
      const std::size_t rs = static_cast<std::size_t>(r);
      lo_[static_cast<std::size_t>(n_ + r)] = model.row_lo()[rs];
      hi_[static_cast<std::size_t>(n_ + r)] = model.row_hi()[rs];
    }
  }

  LpResult run() {
    init_basis();

    LpResult res;
    int confirm_rounds = 0;
    int stall = 0;
    bool bland = false;

    while (true) {
      if (iters_ >= opts_.max_iters) {
        res.status = LpStatus::iteration_limit;
        break;
      }

      const bool feasible = max_infeasibility() <= opts_.feas_tol;
      compute_duals(feasible);
      price(feasible);

      const int q = pick_entering(bland);
      if (q < 0) {
        // No candidate: confirm on a freshly factored basis before deciding.
        if (!etas_.empty() && confirm_rounds < 5) {
          ++confirm_rounds;
          refactor();
          continue;
        }
        res.status = feasible ? LpStatus::optimal : LpStatus::infeasible;
        break;
      }

      const int sigma = direction_of(q);
      load_column_ftran(q, w_);
      prepare_ratio(feasible, sigma);

      // Two-pass ratio test: the relaxed pass finds the largest step any row
      // tolerates with its bound stretched by feas_tol; the exact pass picks,
      // among rows whose true step fits under that cap, the one with the
      // largest pivot magnitude (stability), lowest row on ties.
      kernels::RatioHit relaxed =
          kernels::min_ratio(rd_.data(), rx_.data(), rlo_.data(), rhi_.data(),
                             static_cast<std::size_t>(m_), kRatioPivTol,
                             opts_.feas_tol);

      const std::size_t qs = static_cast<std::size_t>(q);
      const double range = hi_[qs] - lo_[qs];
      const bool flip_possible =
          status_[qs] != kFreeNb && std::isfinite(range);

      if (flip_possible && range <= relaxed.step) {
        apply_bound_flip(q, sigma, range);
        stall = 0;
        bland = false;
        banned_clear();
      } else if (relaxed.index >= 0) {
        auto [row, step] = exact_pass(relaxed.step, bland);
        if (row < 0) {
          // Degenerate numerics: no true step fits the relaxed cap.
          row = static_cast<int>(relaxed.index);
          step = 0.0;
        }
        if (std::fabs(w_[static_cast<std::size_t>(row)]) < kPivotAccept &&
            !etas_.empty()) {
          refactor();
          continue;
        }
        apply_pivot(q, sigma, row, step);
        if (step < kDegenStep) {
          if (++stall > 100) bland = true;
        } else {
          stall = 0;
          bland = false;
        }
        banned_clear();
      } else {
        // No blocking row and no finite own range.
        if (!feasible) {
          // A strictly improving phase-1 direction always meets a violated
          // bound; reaching here means stale numerics. Refactor, or drop the
          // candidate if the factorization is already fresh.
          if (!etas_.empty()) {
            refactor();
          } else {
            banned_[qs] = 1;
            any_banned_ = true;
          }
          continue;
        }
        res.status = LpStatus::unbounded;
        break;
      }

      ++iters_;
      confirm_rounds = 0;
      if (static_cast<int>(etas_.size()) >= opts_.refactor_interval) {
        refactor();
      }
    }

    finalize(res);
    return res;
  }

 private:
  template <typename Emit>
  void for_col(int j, Emit&& emit) const {
    if (j < n_) {
      std::int64_t b = csc_.start[static_cast<std::size_t>(j)];
      std::int64_t e = csc_.start[static_cast<std::size_t>(j) + 1];
      for (std::int64_t k = b; k < e; ++k) {
        emit(csc_.row[static_cast<std::size_t>(k)],
             csc_.val[static_cast<std::size_t>(k)]);
      }
    } else {
      emit(static_cast<std::int32_t>(j - n_), -1.0);
    }
  }

  void init_basis() {
    const std::size_t nt = static_cast<std::size_t>(ntot_);
    status_.assign(nt, kAtLo);
    x_.assign(nt, 0.0);
    basis_.assign(static_cast<std::size_t>(m_), 0);
    pos_of_.assign(nt, -1);
    banned_.assign(nt, 0);

    for (int j = 0; j < n_; ++j) {
      set_nonbasic_default(j);
    }
    for (int r = 0; r < m_; ++r) {
      const int j = n_ + r;
      basis_[static_cast<std::size_t>(r)] = j;
      pos_of_[static_cast<std::size_t>(j)] = r;
      status_[static_cast<std::size_t>(j)] = kBasic;
    }

    w_.assign(static_cast<std::size_t>(m_), 0.0);
    y_.assign(static_cast<std::size_t>(m_), 0.0);
    rhs_.assign(static_cast<std::size_t>(m_), 0.0);
    d_.assign(nt, 0.0);
    viol_.assign(nt, -1.0);
    rd_.assign(static_cast<std::size_t>(m_), 0.0);
    rx_.assign(static_cast<std::size_t>(m_), 0.0);
    rlo_.assign(static_cast<std::size_t>(m_), 0.0);
    rhi_.assign(static_cast<std::size_t>(m_), 0.0);

    refactor();
  }

  void set_nonbasic_default(int j) {
    const std::size_t js = static_cast<std::size_t>(j);
    if (std::isfinite(lo_[js])) {
      status_[js] = kAtLo;
      x_[js] = lo_[js];
    } else if (std::isfinite(hi_[js])) {
      status_[js] = kAtHi;
      x_[js] = hi_[js];
    } else {
      status_[js] = kFreeNb;
      x_[js] = 0.0;
    }
    pos_of_[js] = -1;
  }

  void banned_clear() {
    if (any_banned_) {
      std::fill(banned_.begin(), banned_.end(), 0);
      any_banned_ = false;
    }
  }

  void refactor() {
    try {
      lu_.factor(m_, [&](int p, auto&& emit) {
        for_col(basis_[static_cast<std::size_t>(p)], emit);
      });
    } catch (const SingularBasis&) {
      if (++repairs_ > 2) {
        throw ResourceLimitError(
            "lp: basis factorization failed repeatedly (numerical breakdown)");
      }
      // Basis repair: fall back to the all-logical basis, re-enter phase 1.
      for (int j = 0; j < ntot_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == kBasic) {
          set_nonbasic_default(j);
        }
      }
      for (int r = 0; r < m_; ++r) {
        const int j = n_ + r;
        basis_[static_cast<std::size_t>(r)] = j;
        pos_of_[static_cast<std::size_t>(j)] = r;
        status_[static_cast<std::size_t>(j)] = kBasic;
      }
      lu_.factor(m_, [&](int p, auto&& emit) {
        for_col(basis_[static_cast<std::size_t>(p)], emit);
      });
    }
    etas_.clear();
    recompute_basics();
  }

  // x_B = B^{-1} (-sum of nonbasic columns at their current values).
  void recompute_basics() {
    std::fill(rhs_.begin(), rhs_.end(), 0.0);
    for (int j = 0; j < ntot_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      if (status_[js] == kBasic) continue;
      double v = x_[js];
      if (v == 0.0) continue;
      for_col(j, [&](std::int32_t r, double a) {
        rhs_[static_cast<std::size_t>(r)] -= a * v;
      });
    }
    full_ftran(rhs_);
    for (int p = 0; p < m_; ++p) {
      x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(p)])] =
          rhs_[static_cast<std::size_t>(p)];
    }
  }

  void full_ftran(std::vector<double>& v) const {
    lu_.ftran(v);
    for (const Eta& e : etas_) {
      double t = v[static_cast<std::size_t>(e.pos)] / e.pivot;
      kernels::scatter_axpy(-t, e.idx.data(), e.val.data(), e.idx.size(),
                            v.data());
      v[static_cast<std::size_t>(e.pos)] = t;
    }
  }

  void full_btran(std::vector<double>& v) const {
    for (std::size_t k = etas_.size(); k-- > 0;) {
      const Eta& e = etas_[k];
      double dot = kernels::sparse_dot(e.idx.data(), e.val.data(),
                                       e.idx.size(), v.data());
      v[static_cast<std::size_t>(e.pos)] =
          (v[static_cast<std::size_t>(e.pos)] - dot) / e.pivot;
    }
    lu_.btran(v);
  }

  double max_infeasibility() const {
    double worst = 0.0;
    for (int p = 0; p < m_; ++p) {
      const std::size_t j =
          static_cast<std::size_t>(basis_[static_cast<std::size_t>(p)]);
      double v = x_[j];
      if (v < lo_[j]) worst = std::max(worst, lo_[j] - v);
      if (v > hi_[j]) worst = std::max(worst, v - hi_[j]);
    }
    return worst;
  }

  // Simplex multipliers for the active objective: true costs in phase 2, the
  // infeasibility gradient in phase 1.
  void compute_duals(bool feasible) {
    for (int p = 0; p < m_; ++p) {
      const std::size_t j =
          static_cast<std::size_t>(basis_[static_cast<std::size_t>(p)]);
      double cb;
      if (feasible) {
        cb = cost_[j];
      } else {
        double v = x_[j];
        if (v < lo_[j] - opts_.feas_tol) {
          cb = -1.0;
        } else if (v > hi_[j] + opts_.feas_tol) {
          cb = 1.0;
        } else {
          cb = 0.0;
        }
      }
      y_[static_cast<std::size_t>(p)] = cb;
    }
    full_btran(y_);
  }

  void price(bool feasible) {
    for (int j = 0; j < ntot_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      if (status_[js] == kBasic) {
        d_[js] = 0.0;
        viol_[js] = -1.0;
        continue;
      }
      double dj = feasible ? cost_[js] : 0.0;
      if (j < n_) {
        std::int64_t b = csc_.start[js];
        std::int64_t e = csc_.start[js + 1];
        dj -= kernels::sparse_dot(csc_.row.data() + b, csc_.val.data() + b,
                                  static_cast<std::size_t>(e - b), y_.data());
      } else {
        dj += y_[static_cast<std::size_t>(j - n_)];
      }
      d_[js] = dj;

      bool eligible = false;
      if (lo_[js] < hi_[js] && !banned_[js]) {
        switch (status_[js]) {
          case kAtLo: eligible = dj < -opts_.opt_tol; break;
          case kAtHi: eligible = dj > opts_.opt_tol; break;
          case kFreeNb: eligible = std::fabs(dj) > opts_.opt_tol; break;
          default: break;
        }
      }
      viol_[js] = eligible ? std::fabs(dj) : -1.0;
    }
  }

  int pick_entering(bool bland) const {
    if (bland) {
      for (int j = 0; j < ntot_; ++j) {
        if (viol_[static_cast<std::size_t>(j)] > 0.0) return j;
      }
      return -1;
    }
    std::size_t q = kernels::argmax(viol_.data(), viol_.size());
    if (q == static_cast<std::size_t>(-1) || viol_[q] <= 0.0) return -1;
    return static_cast<int>(q);
  }

  int direction_of(int q) const {
    const std::size_t qs = static_cast<std::size_t>(q);
    switch (status_[qs]) {
      case kAtLo: return 1;
      case kAtHi: return -1;
      case kFreeNb: return d_[qs] < 0.0 ? 1 : -1;
      default: return 1;
    }
  }

  void load_column_ftran(int q, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for_col(q, [&](std::int32_t r, double v) {
      out[static_cast<std::size_t>(r)] += v;
    });
    full_ftran(out);
  }

  // Effective ratio-test bounds: a basic variable that is currently
  // infeasible blocks at the bound it violates (restoring feasibility); a
  // feasible one blocks at its true bounds.
  void prepare_ratio(bool feasible, int sigma) {
    for (int p = 0; p < m_; ++p) {
      const std::size_t ps = static_cast<std::size_t>(p);
      const std::size_t j = static_cast<std::size_t>(basis_[ps]);
      rd_[ps] = sigma * w_[ps];
      double v = x_[j];
      rx_[ps] = v;
      double l = lo_[j], h = hi_[j];
      if (!feasible) {
        if (v < l - opts_.feas_tol) {
          rlo_[ps] = -kInf;
          rhi_[ps] = l;
          continue;
        }
        if (v > h + opts_.feas_tol) {
          rlo_[ps] = h;
          rhi_[ps] = kInf;
          continue;
        }
      }
      rlo_[ps] = l;
      rhi_[ps] = h;
    }
  }

  // Exact second pass under the relaxed cap. Normal mode prefers the largest
  // pivot magnitude (ties: lowest row); Bland mode prefers the lowest basic
  // variable index, which breaks degenerate cycles.
  std::pair<int, double> exact_pass(double cap, bool bland) const {
    int best_row = -1;
    double best_step = 0.0;
    double best_mag = 0.0;
    int best_var = ntot_;
    for (int p = 0; p < m_; ++p) {
      const std::size_t ps = static_cast<std::size_t>(p);
      double di = rd_[ps];
      double step;
      if (di > kRatioPivTol) {
        if (rlo_[ps] == -kInf) continue;
        step = (rx_[ps] - rlo_[ps]) / di;
      } else if (di < -kRatioPivTol) {
        if (rhi_[ps] == kInf) continue;
        step = (rx_[ps] - rhi_[ps]) / di;
      } else {
        continue;
      }
      if (step < 0.0) step = 0.0;
      if (step > cap) continue;
      if (bland) {
        if (basis_[ps] < best_var) {
          best_var = basis_[ps];
          best_row = p;
          best_step = step;
        }
      } else {
        double mag = std::fabs(di);
        if (mag > best_mag) {
          best_mag = mag;
          best_row = p;
          best_step = step;
        }
      }
    }
    return {best_row, best_step};
  }

  void apply_bound_flip(int q, int sigma, double range) {
    const std::size_t qs = static_cast<std::size_t>(q);
    for (int p = 0; p < m_; ++p) {
      const std::size_t ps = static_cast<std::size_t>(p);
      x_[static_cast<std::size_t>(basis_[ps])] -= range * sigma * w_[ps];
    }
    if (status_[qs] == kAtLo) {
      status_[qs] = kAtHi;
      x_[qs] = hi_[qs];
    } else {
      status_[qs] = kAtLo;
      x_[qs] = lo_[qs];
    }
  }

  void apply_pivot(int q, int sigma, int r, double step) {
    const std::size_t qs = static_cast<std::size_t>(q);
    const std::size_t rs = static_cast<std::size_t>(r);
    const int leaving = basis_[rs];
    const std::size_t ls = static_cast<std::size_t>(leaving);

    for (int p = 0; p < m_; ++p) {
      const std::size_t ps = static_cast<std::size_t>(p);
      x_[static_cast<std::size_t>(basis_[ps])] -= step * sigma * w_[ps];
    }
    double enter_val;
    switch (status_[qs]) {
      case kAtLo: enter_val = lo_[qs] + sigma * step; break;
      case kAtHi: enter_val = hi_[qs] + sigma * step; break;
      default: enter_val = sigma * step; break;
    }

    // The leaving variable lands exactly on the bound that blocked it (the
    // effective bound is always one of its true bounds).
    const double rate = sigma * w_[rs];
    const double hit = rate > 0.0 ? rlo_[rs] : rhi_[rs];
    x_[ls] = hit;
    status_[ls] = (hit == lo_[ls]) ? kAtLo : kAtHi;
    pos_of_[ls] = -1;

    basis_[rs] = q;
    pos_of_[qs] = r;
    status_[qs] = kBasic;
    x_[qs] = enter_val;

    Eta e;
    e.pos = r;
    e.pivot = w_[rs];
    for (int p = 0; p < m_; ++p) {
      if (p == r) continue;
      double v = w_[static_cast<std::size_t>(p)];
      if (v != 0.0) {
        e.idx.push_back(p);
        e.val.push_back(v);
      }
    }
    etas_.push_back(std::move(e));
  }

  void finalize(LpResult& res) {
    res.iterations = iters_;
    res.x.assign(x_.begin(), x_.begin() + n_);
    res.objective = 0.0;
    for (int j = 0; j < n_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      res.objective += cost_[js] * res.x[js];
    }
    res.row_activity.assign(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < n_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      double v = res.x[js];
      if (v == 0.0) continue;
      std::int64_t b = csc_.start[js];
      std::int64_t e = csc_.start[js + 1];
      for (std::int64_t k = b; k < e; ++k) {
        res.row_activity[static_cast<std::size_t>(
            csc_.row[static_cast<std::size_t>(k)])] +=
            csc_.val[static_cast<std::size_t>(k)] * v;
      }
    }
    // Duals and reduced costs from the final basis with the true objective.
    compute_duals(true);
    res.dual.assign(y_.begin(), y_.end());
    res.reduced_cost.assign(static_cast<std::size_t>(n_), 0.0);
    for (int j = 0; j < n_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      double dj = cost_[js];
      std::int64_t b = csc_.start[js];
      std::int64_t e = csc_.start[js + 1];
      dj -= kernels::sparse_dot(csc_.row.data() + b, csc_.val.data() + b,
                                static_cast<std::size_t>(e - b), y_.data());
      res.reduced_cost[js] = dj;
    }
  }

  SolverOptions opts_;
  Csc csc_;
  int n_ = 0, m_ = 0, ntot_ = 0;
  std::vector<double> cost_, lo_, hi_;

  std::vector<std::uint8_t> status_;
  std::vector<double> x_;
  std::vector<std::int32_t> basis_;
  std::vector<std::int32_t> pos_of_;
  LuFactor lu_;

  struct Eta {
    std::int32_t pos = 0;
    double pivot = 0.0;
    std::vector<std::int32_t> idx;
    std::vector<double> val;
  };
  std::vector<Eta> etas_;

  std::vector<double> w_, y_, rhs_, d_, viol_;
  std::vector<double> rd_, rx_, rlo_, rhi_;
  std::vector<char> banned_;
  bool any_banned_ = false;
  long iters_ = 0;
  int repairs_ = 0;
};

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

LpResult solve_lp(const Model& model, const SolverOptions& opts) {
  model.validate();
  if (model.num_rows() == 0) {
    // Pure bound problem: each column sits at its cheaper bound.
    LpResult res;
    res.status = LpStatus::optimal;
    res.x.resize(static_cast<std::size_t>(model.num_cols()));
    for (int j = 0; j < model.num_cols(); ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      double c = model.obj()[js];
      double lo = model.col_lo()[js], hi = model.col_hi()[js];
      double v;
      if (c > 0.0) {
        v = lo;
      } else if (c < 0.0) {
        v = hi;
      } else {
        v = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
      }
      if (!std::isfinite(v)) {
        res.status = LpStatus::unbounded;
        return res;
      }
      res.x[js] = v;
      res.objective += c * v;
    }
    res.reduced_cost = model.obj();
    return res;
  }
  Simplex simplex(model, opts);
  return simplex.run();
}

std::string write_lp_text(const Model& model,
                          const std::vector<std::string>& col_names,
                          const std::vector<std::string>& row_names,
                          const std::vector<int>& binary_cols) {
  model.validate();
  if (static_cast<int>(col_names.size()) != model.num_cols() ||
      static_cast<int>(row_names.size()) != model.num_rows()) {
    throw ValidationError("lp text export: name count mismatch");
  }

  std::vector<Model::Entry> ents = model.entries();
  std::sort(ents.begin(), ents.end(),
            [](const Model::Entry& a, const Model::Entry& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });

  std::ostringstream os;
  os << "Minimize\n obj:";
  bool first = true;
  for (int j = 0; j < model.num_cols(); ++j) {
    double c = model.obj()[static_cast<std::size_t>(j)];
    if (c == 0.0) continue;
    os << (first ? (c < 0 ? " - " : " ") : (c < 0 ? " - " : " + "));
    os << fmt_num(std::fabs(c)) << " "
       << col_names[static_cast<std::size_t>(j)];
    first = false;
  }
  if (first) os << " 0 " << (model.num_cols() ? col_names[0] : "x0");
  os << "\nSubject To\n";

  std::size_t i = 0;
  for (int r = 0; r < model.num_rows(); ++r) {
    std::ostringstream lhs;
    bool any = false;
    while (i < ents.size() && ents[i].row == r) {
      std::int32_t c = ents[i].col;
      double v = 0.0;
      while (i < ents.size() && ents[i].row == r && ents[i].col == c) {
        v += ents[i].value;
        ++i;
      }
      if (v == 0.0) continue;
      lhs << (any ? (v < 0 ? " - " : " + ") : (v < 0 ? "- " : ""));
      lhs << fmt_num(std::fabs(v)) << " "
          << col_names[static_cast<std::size_t>(c)];
      any = true;
    }
    if (!any) lhs << "0 " << (model.num_cols() ? col_names[0] : "x0");

    const std::string& name = row_names[static_cast<std::size_t>(r)];
    double lo = model.row_lo()[static_cast<std::size_t>(r)];
    double hi = model.row_hi()[static_cast<std::size_t>(r)];
    if (lo == hi) {
      os << " " << name << ": " << lhs.str() << " = " << fmt_num(lo) << "\n";
    } else {
      if (std::isfinite(hi)) {
        os << " " << name << (std::isfinite(lo) ? "_hi" : "") << ": "
           << lhs.str() << " <= " << fmt_num(hi) << "\n";
      }
      if (std::isfinite(lo)) {
        os << " " << name << (std::isfinite(hi) ? "_lo" : "") << ": "
           << lhs.str() << " >= " << fmt_num(lo) << "\n";
      }
    }
  }

  os << "Bounds\n";
  for (int j = 0; j < model.num_cols(); ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    double lo = model.col_lo()[js], hi = model.col_hi()[js];
    const std::string& name = col_names[js];
    if (lo == hi) {
      os << " " << name << " = " << fmt_num(lo) << "\n";
    } else if (!std::isfinite(lo) && !std::isfinite(hi)) {
      os << " " << name << " free\n";
    } else if (!std::isfinite(hi)) {
      os << " " << name << " >= " << fmt_num(lo) << "\n";
    } else if (!std::isfinite(lo)) {
      os << " " << name << " <= " << fmt_num(hi) << "\n";
    } else {
      os << " " << fmt_num(lo) << " <= " << name << " <= " << fmt_num(hi)
         << "\n";
    }
  }

  if (!binary_cols.empty()) {
    os << "Binary\n";
    for (int j : binary_cols) {
      os << " " << col_names[static_cast<std::size_t>(j)] << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace slicesim::lp
