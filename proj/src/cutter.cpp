#include "optdesign/cutter.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <stdexcept>

#include "optdesign/parallel.hpp"

namespace optdesign {

void SolveConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  if (max_iter == 0) throw std::invalid_argument("max_iter must be positive");
  if (stop_on_equivalence && !(*stop_on_equivalence >= 0.0))
    throw std::invalid_argument("equivalence stopping threshold must be nonnegative");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GapBelowEpsilon: return "GapBelowEpsilon";
    case StopReason::EquivalenceStop: return "EquivalenceStop";
    case StopReason::IterLimit: return "IterLimit";
    case StopReason::InfeasibleConstraint: return "InfeasibleConstraint";
  }
  return "?";
}

Vector EkSweep::values() const {
  Vector v;
  for (const auto& e : entries) v.push_back(e.value);
  return v;
}

Design pruned(const Design& design, double threshold) {
  Vector w = design.weights();
  for (double& v : w)
    if (v < threshold) v = 0.0;
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) return design;
  return Design::from_weights(std::move(w), true);
}

namespace {

constexpr double kDuplicateTol = 1e-12;
constexpr int kMaxStalls = 3;
constexpr int kMaxFlatBounds = 25;
constexpr double kFloorGap = 1e-8;

// What one cutting-plane run needs to know about its criterion.
struct CutProblem {
  std::size_t n_points = 0;
  std::string name;
  std::function<double(const Design&)> value;
  std::function<std::vector<Vector>(const Design&)> objective_cuts;
  // Optional level constraint sum_x g(x) xi(x) >= threshold (D-given-A).
  std::function<Vector(const Design&)> level_cut;
  std::function<double(const Design&)> level_value;
  double level_threshold = 0.0;
  std::function<EquivalenceGap(const Design&)> equivalence;
};

bool is_duplicate(const Vector& candidate, const std::vector<Vector>& existing) {
  for (const auto& row : existing) {
    bool same = true;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::abs(row[i] - candidate[i]) >= kDuplicateTol) {
        same = false;
        break;
      }
    }
    if (same) return true;
  }
  return false;
}

EquivalenceGap safe_equivalence(const CutProblem& problem, const Design& design) {
  if (!problem.equivalence) return {std::numeric_limits<double>::quiet_NaN(), false};
  try {
    return problem.equivalence(design);
  } catch (const NearSingular&) {
    return {std::numeric_limits<double>::infinity(), false};
  }
}

SolveReport run_cutting_plane(const CutProblem& problem, const SolveConfig& config) {
  config.validate();
  SolveReport report;
  report.criterion = problem.name;
  const bool constrained = static_cast<bool>(problem.level_cut);
  if (constrained) report.a_threshold = problem.level_threshold;

  CutLPSolver lp(problem.n_points);
  for (const auto& row : config.cost_constraints) lp.add_equality(row.coefficients, row.rhs);

  std::vector<Design> pending = config.initial_designs;
  if (pending.empty()) {
    pending.push_back(Design::from_weights(
        Vector(problem.n_points, 1.0 / static_cast<double>(problem.n_points)), true));
  }
  for (const auto& d : pending)
    if (d.size() != problem.n_points) throw std::invalid_argument("initial design does not match the design space");

  std::vector<Vector> level_rows;
  double best_bound = std::numeric_limits<double>::infinity();
  std::optional<Design> best;
  double best_value = -std::numeric_limits<double>::infinity();
  int stalls = 0;
  int flat_bounds = 0;
  double last_t = std::numeric_limits<double>::quiet_NaN();

  auto finish = [&](const Design& design, double value, StopReason reason) {
    report.design = design;
    report.phi_value = value;
    report.upper_bound = best_bound;
    report.gap = best_bound - value;
    report.stop_reason = reason;
    report.cuts = lp.problem().objective_cuts.size();
    if (config.final_lp_hook) config.final_lp_hook(lp.problem());
    const EquivalenceGap eq = safe_equivalence(problem, design);
    report.equivalence_gap = eq.value;
    report.equivalence_reliable = eq.reliable;
    if (constrained) {
      report.a_value = problem.level_value(design);
      report.delta_a_achieved = *report.a_value - problem.level_threshold;
    }
    return report;
  };

  for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
    std::size_t added = 0;
    for (const auto& mu : pending) {
      for (auto& h : problem.objective_cuts(mu)) {
        if (is_duplicate(h, lp.problem().objective_cuts)) continue;
        lp.add_objective_cut(std::move(h));
        ++added;
      }
      if (constrained) {
        Vector g = problem.level_cut(mu);
        if (!is_duplicate(g, level_rows)) {
          level_rows.push_back(g);
          lp.add_level_cut(std::move(g), problem.level_threshold);
          ++added;
        }
      }
    }
    pending.clear();
    if (added == 0) {
      if (++stalls >= kMaxStalls) {
        report.diagnostic = "cutting plane stalled: no new cuts generated";
        return finish(best.value_or(report.design), best ? best_value : report.phi_value, StopReason::IterLimit);
      }
    } else {
      stalls = 0;
    }

    const LPSolution sol = lp.solve();
    report.iterations = iter;
    if (sol.status == LPStatus::Infeasible) {
      report.diagnostic = "LP relaxation infeasible: the level constraint cannot be met";
      const Design d = best.value_or(config.initial_designs.empty()
                                         ? Design::from_weights(Vector(problem.n_points, 1.0), true)
                                         : config.initial_designs.front());
      return finish(d, problem.value(d), StopReason::InfeasibleConstraint);
    }
    if (sol.status != LPStatus::Optimal) {
      report.diagnostic = "LP solver stopped with status " + to_string(sol.status);
      if (best) return finish(*best, best_value, StopReason::IterLimit);
      throw std::runtime_error(report.diagnostic);
    }

    const Design xi = Design::from_weights(sol.xi, true);
    const double value = problem.value(xi);
    const double t = sol.t_star;
    best_bound = std::min(best_bound, t);
    const double gap = t - value;
    flat_bounds = t == last_t && value <= best_value ? flat_bounds + 1 : 0;
    last_t = t;

    std::optional<double> a_gap;
    if (constrained) a_gap = problem.level_value(xi) - problem.level_threshold;
    if (config.record_trace) report.trace.push_back({iter, t, value, gap, a_gap});

    const bool level_ok = !constrained || *a_gap >= config.delta_a;
    if (level_ok && value > best_value) {
      best_value = value;
      best = xi;
    }
    if (gap < config.epsilon && level_ok) {
      report.design = xi;
      return finish(xi, value, StopReason::GapBelowEpsilon);
    }
    if (config.stop_on_equivalence && level_ok) {
      const EquivalenceGap eq = safe_equivalence(problem, xi);
      if (eq.reliable && eq.value < *config.stop_on_equivalence) return finish(xi, value, StopReason::EquivalenceStop);
    }
    report.design = xi;
    report.phi_value = value;
    // A bound that stays put while the iterates stop improving means the LP
    // cannot resolve the remaining gap; only trust that near convergence.
    if (flat_bounds >= kMaxFlatBounds && t - best_value <= kFloorGap * std::max(1.0, std::abs(t))) {
      report.diagnostic = "LP bound no longer improves; gap is at the numerical floor";
      return finish(best.value_or(xi), best ? best_value : value, StopReason::IterLimit);
    }
    pending.push_back(xi);
  }
  report.diagnostic = "iteration limit reached";
  if (best) return finish(*best, best_value, StopReason::IterLimit);
  return finish(report.design, report.phi_value, StopReason::IterLimit);
}

std::vector<Vector> local_cuts(const Criterion& criterion, const DesignSpace& space, const Design& mu,
                               double gamma) {
  InfoMatrix info = info_matrix(space, mu);
  if (criterion.kind == Criterion::Kind::D || criterion.kind == Criterion::Kind::A)
    info = info.regularized_if_singular(gamma);
  std::vector<Vector> out;
  for (auto& c : cuts(criterion, space, info)) out.push_back(std::move(c.coefficients));
  return out;
}

}  // namespace

SolveReport solve(const Criterion& criterion, const DesignSpace& space, const SolveConfig& config) {
  criterion.validate(space.dim());
  CutProblem problem;
  problem.n_points = space.size();
  problem.name = criterion.name();
  problem.value = [&](const Design& d) { return phi(criterion, space, d); };
  problem.objective_cuts = [&](const Design& mu) { return local_cuts(criterion, space, mu, config.gamma); };
  if (criterion.kind != Criterion::Kind::MaximinEff)
    problem.equivalence = [&](const Design& d) { return equivalence_gap(criterion, space, d); };
  SolveReport report = run_cutting_plane(problem, config);
  if (criterion.kind == Criterion::Kind::MaximinEff) {
    report.efficiencies = efficiencies(info_matrix(space, report.design), criterion.normalizers);
    report.psi = *std::min_element(report.efficiencies.begin(), report.efficiencies.end());
  }
  return report;
}

SolveReport solve_ave(const Criterion& base, const Prior& prior, const SolveConfig& config) {
  prior.validate();
  if (base.kind == Criterion::Kind::MaximinEff) throw std::invalid_argument("averaged criteria are built on D, A or E_k");
  base.validate(prior.spaces.front().dim());
  CutProblem problem;
  problem.n_points = prior.spaces.front().size();
  problem.name = "AVE-" + base.name();
  problem.value = [&](const Design& d) { return ave_phi(base, prior, d); };
  const double gamma = config.gamma > 0.0 ? config.gamma : 1e-8;
  problem.objective_cuts = [&, gamma](const Design& mu) {
    return std::vector<Vector>{ave_cut(base, prior, mu, gamma).coefficients};
  };
  if (prior.spaces.size() == 1)
    problem.equivalence = [&](const Design& d) { return equivalence_gap(base, prior.spaces.front(), d); };
  return run_cutting_plane(problem, config);
}

EkSweep solve_ek_sweep(const DesignSpace& space, const SolveConfig& config, bool parallel) {
  const std::size_t p = space.dim();
  EkSweep sweep;
  sweep.entries.resize(p);
  auto run_one = [&](std::size_t k) {
    EkOptimum e;
    e.k = k;
    e.report = solve(Criterion::ek(k), space, config);
    e.value = e.report.phi_value;
    return e;
  };
  if (parallel && thread_limit() > 1) {
    const std::size_t batch = thread_limit();
    for (std::size_t start = 1; start <= p; start += batch) {
      std::vector<std::future<EkOptimum>> futures;
      for (std::size_t k = start; k < start + batch && k <= p; ++k)
        futures.push_back(std::async(std::launch::async, run_one, k));
      for (std::size_t i = 0; i < futures.size(); ++i) sweep.entries[start - 1 + i] = futures[i].get();
    }
  } else {
    for (std::size_t k = 1; k <= p; ++k) sweep.entries[k - 1] = run_one(k);
  }
  const double tol = std::max(1e-9, 2.0 * config.epsilon);
  for (std::size_t k = 1; k < p; ++k)
    if (sweep.entries[k].value < sweep.entries[k - 1].value - tol) sweep.monotone = false;
  return sweep;
}

SolveReport solve_maximin(const DesignSpace& space, const SolveConfig& config, std::optional<Vector> precomputed_ek) {
  Vector normalizers;
  if (precomputed_ek) {
    normalizers = *precomputed_ek;
    if (normalizers.size() != space.dim()) throw std::invalid_argument("one E_k optimum per eigenvalue is required");
  } else {
    normalizers = solve_ek_sweep(space, config).values();
  }
  return solve(Criterion::maximin(std::move(normalizers)), space, config);
}

SolveReport solve_d_given_a(const DesignSpace& space, double a, const SolveConfig& config, std::optional<double> a_star) {
  const Criterion d = Criterion::d();
  const Criterion acrit = Criterion::a();
  if (a_star && a >= *a_star) {
    SolveReport report;
    report.criterion = "D|A";
    report.a_threshold = a;
    report.stop_reason = StopReason::InfeasibleConstraint;
    report.diagnostic = "threshold a exceeds the A-optimal value; no design can satisfy it";
    report.design = uniform_design(space);
    report.phi_value = phi(d, space, report.design);
    report.a_value = phi(acrit, space, report.design);
    report.delta_a_achieved = *report.a_value - a;
    report.equivalence_gap = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  CutProblem problem;
  problem.n_points = space.size();
  problem.name = "D|A";
  problem.value = [&](const Design& x) { return phi(d, space, x); };
  problem.objective_cuts = [&](const Design& mu) { return local_cuts(d, space, mu, config.gamma); };
  problem.level_cut = [&](const Design& mu) { return local_cuts(acrit, space, mu, config.gamma).front(); };
  problem.level_value = [&](const Design& x) { return phi(acrit, space, x); };
  problem.level_threshold = a;
  return run_cutting_plane(problem, config);
}

EfficiencySweep efficiency_sweep(const DesignSpace& space, std::vector<double> a_values, const SolveConfig& config,
                                 bool parallel) {
  std::sort(a_values.begin(), a_values.end());
  EfficiencySweep out;
  out.phi_d_star = solve(Criterion::d(), space, config).phi_value;
  out.phi_a_star = solve(Criterion::a(), space, config).phi_value;
  auto run_one = [&](double a) {
    SweepRow row;
    row.a = a;
    try {
      const SolveReport r = solve_d_given_a(space, a, config, out.phi_a_star);
      row.phi_d = r.phi_value;
      row.phi_a = r.a_value.value_or(0.0);
      row.eff_d = row.phi_d / out.phi_d_star;
      row.eff_a = row.phi_a / out.phi_a_star;
      row.iterations = r.iterations;
      row.stop_reason = r.stop_reason;
      if (r.stop_reason != StopReason::GapBelowEpsilon) row.error = r.diagnostic;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };
  out.rows.resize(a_values.size());
  if (parallel && thread_limit() > 1) {
    const std::size_t batch = thread_limit();
    for (std::size_t start = 0; start < a_values.size(); start += batch) {
      std::vector<std::future<SweepRow>> futures;
      for (std::size_t i = start; i < start + batch && i < a_values.size(); ++i)
        futures.push_back(std::async(std::launch::async, run_one, a_values[i]));
      for (std::size_t i = 0; i < futures.size(); ++i) out.rows[start + i] = futures[i].get();
    }
  } else {
    for (std::size_t i = 0; i < a_values.size(); ++i) out.rows[i] = run_one(a_values[i]);
  }
  return out;
}

}  // namespace optdesign
