#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "optdesign/linalg.hpp"

namespace optdesign {

enum class LPStatus { Optimal, Infeasible, Unbounded, IterLimit };

std::string to_string(LPStatus status);

/// sum_x g(x) xi(x) >= threshold
struct LevelCut {
  Vector coefficients;
  double threshold = 0.0;
};

/// sum_x c(x) xi(x) == rhs
struct EqualityRow {
  Vector coefficients;
  double rhs = 0.0;
};

/// maximize t
///   s.t. sum_x h_j(x) xi(x) >= t     for every objective cut h_j
///        sum_x g_l(x) xi(x) >= a_l   for every level cut
///        sum_x c_r(x) xi(x) == c_r   for every equality row
///        sum_x xi(x) == 1, xi >= 0, t free.
/// The simplex row sum(xi) == 1 is always imposed and is not listed in
/// `equality_rows`.
struct CutLP {
  std::size_t n_points = 0;
  std::vector<Vector> objective_cuts;
  std::vector<LevelCut> level_cuts;
  std::vector<EqualityRow> equality_rows;

  /// Throws std::invalid_argument when a row has the wrong length, a
  /// coefficient is not finite or there is no objective cut.
  void validate() const;
};

struct LPSolution {
  LPStatus status = LPStatus::IterLimit;
  double t_star = 0.0;
  Vector xi;
  /// Objective cuts, level cuts, the simplex row, equality rows, in that
  /// order.  Sign convention: the reduced cost of xi(x) is
  /// -sum_rows dual * coefficient(x) (objective rows enter with -h).
  Vector dual_values;
  std::size_t pivots = 0;
  std::size_t rounds = 0;
};

/// Solves a CutLP from scratch.
LPSolution solve_lp(const CutLP& problem);

/// Plain-text listing of the LP, one row per line.
std::string dump_lp(const CutLP& problem);

/// Incremental solver for a growing cut set.  Rows are never removed; the
/// working set of rows and columns carried between solves only speeds up
/// the next solve, every solve is exact for the full problem.
class CutLPSolver {
 public:
  explicit CutLPSolver(std::size_t n_points);

  std::size_t add_objective_cut(Vector coefficients);
  std::size_t add_level_cut(Vector coefficients, double threshold);
  void add_equality(Vector coefficients, double rhs);

  LPSolution solve();

  const CutLP& problem() const { return problem_; }

 private:
  struct RowScale {
    double scale = 1.0;
    std::size_t argmax = 0;
  };

  CutLP problem_;
  std::vector<RowScale> obj_scale_;
  std::vector<RowScale> lvl_scale_;
  std::vector<double> eq_scale_;

  std::vector<std::size_t> active_obj_;
  std::vector<std::size_t> active_lvl_;
  std::size_t seen_obj_ = 0;
  std::size_t seen_lvl_ = 0;
  Vector last_xi_;
  double last_t_ = 0.0;
  bool have_last_ = false;
};

}  // namespace optdesign
