#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slicesim::lp {

// Linear program in the form
//   minimize c^T x   subject to   row_lo <= A x <= row_hi,  col_lo <= x <= col_hi
// Rows and columns are appended through the builder calls; coefficients are
// collected as triplets and duplicates sum. One-sided rows/columns use
// +/-infinity bounds; equalities use lo == hi.
class Model {
 public:
  int add_col(double obj, double lo, double hi);
  int add_row(double lo, double hi);
  void add_entry(int row, int col, double coeff);
  // Retightens an existing column in place (used for branch-and-bound fixing).
  void set_col_bounds(int col, double lo, double hi);

  int num_cols() const { return static_cast<int>(obj_.size()); }
  int num_rows() const { return static_cast<int>(row_lo_.size()); }

  const std::vector<double>& obj() const { return obj_; }
  const std::vector<double>& col_lo() const { return col_lo_; }
  const std::vector<double>& col_hi() const { return col_hi_; }
  const std::vector<double>& row_lo() const { return row_lo_; }
  const std::vector<double>& row_hi() const { return row_hi_; }

  struct Entry {
    std::int32_t row;
    std::int32_t col;
    double value;
  };
  const std::vector<Entry>& entries() const { return entries_; }

  // Throws ValidationError on NaN/infinite coefficients, crossed bounds, or
  // out-of-range indices.
  void validate() const;

 private:
  std::vector<double> obj_, col_lo_, col_hi_, row_lo_, row_hi_;
  std::vector<Entry> entries_;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  double objective = 0.0;
  std::vector<double> x;             // structural column values
  std::vector<double> row_activity;  // A x per row
  std::vector<double> dual;          // simplex multiplier per row
  std::vector<double> reduced_cost;  // c_j - dual^T A_j per column
  long iterations = 0;
};

struct SolverOptions {
  double feas_tol = 1e-7;  // bound violation tolerance
  double opt_tol = 1e-7;   // reduced-cost (dual) tolerance
  long max_iters = 500000;
  int refactor_interval = 64;  // eta updates between refactorizations
};

// Bounded-variable revised simplex: composite phase 1 (no artificial
// variables), Dantzig pricing with lowest-index ties and a Bland fallback
// after degenerate stalls, sparse LU basis with product-form updates.
// Deterministic for a fixed model, options, and kernel backend.
LpResult solve_lp(const Model& model, const SolverOptions& opts = {});

// Text export in LP format for cross-checking against external solvers.
// Ranged rows split into two inequalities; binary_cols lists columns to
// declare in the Binary section.
std::string write_lp_text(const Model& model,
                          const std::vector<std::string>& col_names,
                          const std::vector<std::string>& row_names,
                          const std::vector<int>& binary_cols);

}  // namespace slicesim::lp
