#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optdesign/criteria.hpp"
#include "optdesign/lp.hpp"
#include "optdesign/model.hpp"

namespace optdesign {

struct SolveConfig {
  /// Stop once the LP upper bound exceeds the criterion value by less than this.
  double epsilon = 1e-10;
  /// D-given-A: stop only when phi_A(xi) - a >= delta_a.
  double delta_a = -1e-9;
  /// Regularization M + gamma I for D and A cuts from singular designs.
  double gamma = 1e-8;
  std::size_t max_iter = 5000;
  /// Designs whose cuts seed the first LP.  Empty means the uniform design.
  std::vector<Design> initial_designs;
  /// Optional stop once the equivalence-theorem gap drops below this.
  std::optional<double> stop_on_equivalence;
  bool record_trace = true;
  /// Supplementary linear constraints sum_x c(x) xi(x) == rhs (cost budgets).
  std::vector<EqualityRow> cost_constraints;
  /// Called once with the last LP of the run (used by --dump-lp).
  std::function<void(const CutLP&)> final_lp_hook;

  void validate() const;
};

enum class StopReason { GapBelowEpsilon, EquivalenceStop, IterLimit, InfeasibleConstraint };

std::string to_string(StopReason reason);

struct TraceEntry {
  std::size_t iteration = 0;
  double upper_bound = 0.0;  // t^(n)
  double phi = 0.0;          // phi(xi^(n))
  double gap = 0.0;          // t^(n) - phi(xi^(n))
  /// D-given-A only: phi_A(xi^(n)) - a.
  std::optional<double> a_gap;
};

struct SolveReport {
  std::string criterion;
  Design design = Design::from_weights({1.0});
  double phi_value = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::size_t cuts = 0;
  StopReason stop_reason = StopReason::IterLimit;
  std::string diagnostic;
  double equivalence_gap = 0.0;
  bool equivalence_reliable = false;
  std::vector<TraceEntry> trace;

  // D-given-A
  std::optional<double> a_value;
  std::optional<double> a_threshold;
  std::optional<double> delta_a_achieved;

  // Maximin
  Vector efficiencies;
  std::optional<double> psi;
};

/// Maximizes a local criterion (D, A or E_k) over the design space.
SolveReport solve(const Criterion& criterion, const DesignSpace& space, const SolveConfig& config);

/// Maximizes the prior-averaged criterion sum_theta pi(theta) phi(xi, theta).
SolveReport solve_ave(const Criterion& base, const Prior& prior, const SolveConfig& config);

struct EkOptimum {
  std::size_t k = 0;
  double value = 0.0;
  SolveReport report;
};

struct EkSweep {
  std::vector<EkOptimum> entries;
  /// E_k(opt) nondecreasing in k within max(1e-9, 2 epsilon).
  bool monotone = true;

  Vector values() const;
};

/// E_k(opt) for k = 1..p.  Runs the p solves concurrently when `parallel`.
EkSweep solve_ek_sweep(const DesignSpace& space, const SolveConfig& config, bool parallel = false);

/// Maximin efficiency over the E_k family, normalized by E_k(opt).  The
/// optima are computed first when not supplied.
SolveReport solve_maximin(const DesignSpace& space, const SolveConfig& config,
                          std::optional<Vector> precomputed_ek = std::nullopt);

/// D-optimal design subject to phi_A(xi) >= a.  When `a_star` (the A-optimal
/// value) is given, a >= a_star is rejected without iterating.
SolveReport solve_d_given_a(const DesignSpace& space, double a, const SolveConfig& config,
                            std::optional<double> a_star = std::nullopt);

struct SweepRow {
  double a = 0.0;
  double eff_d = 0.0;
  double eff_a = 0.0;
  double phi_d = 0.0;
  double phi_a = 0.0;
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::IterLimit;
  std::string error;
};

struct EfficiencySweep {
  double phi_d_star = 0.0;
  double phi_a_star = 0.0;
  std::vector<SweepRow> rows;
};

/// eff_D and eff_A of the D-given-A designs over a list of thresholds.
/// Rows are sorted by a; failures are recorded per row.
EfficiencySweep efficiency_sweep(const DesignSpace& space, std::vector<double> a_values,
                                 const SolveConfig& config, bool parallel = false);

/// Weights pruned below `threshold` and renormalized, for display.
Design pruned(const Design& design, double threshold = 1e-6);

}  // namespace optdesign
