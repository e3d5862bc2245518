#include <cmath>
#include <random>

#include "doctest.h"
#include "optdesign/cutter.hpp"
#include "oracle.hpp"

using namespace optdesign;

namespace {

DesignSpace quadratic21() { return poly_model(2, make_grid(-1.0, 1.0, 0.1)); }

SolveConfig tight() {
  SolveConfig c;
  c.epsilon = 1e-10;
  return c;
}

double oracle_value(const Criterion& c, const oracle::Mat& m) {
  switch (c.kind) {
    case Criterion::Kind::D: return oracle::phi_d(m);
    case Criterion::Kind::A: return oracle::phi_a(m);
    default: return oracle::phi_ek(m, static_cast<int>(c.k));
  }
}

// Best design supported on at most three points: coarse simplex grid over
// every triple, then compass search on the most promising triples.
double brute_force(const Criterion& c, const DesignSpace& s) {
  const std::size_t n = s.size();
  auto value = [&](std::size_t i, std::size_t j, std::size_t k, double a, double b) {
    if (a < 0.0 || b < 0.0 || a + b > 1.0) return -HUGE_VAL;
    std::vector<double> w(n, 0.0);
    w[i] += a;
    w[j] += b;
    w[k] += 1.0 - a - b;
    return oracle_value(c, oracle::info(s, w));
  };
  struct Candidate {
    double v;
    std::size_t i, j, k;
    double a, b;
  };
  std::vector<Candidate> found;
  const int steps = 20;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        Candidate best{-INFINITY, i, j, k, 0, 0};
        for (int x = 0; x <= steps; ++x)
          for (int y = 0; x + y <= steps; ++y) {
            const double a = double(x) / steps, b = double(y) / steps;
            const double v = value(i, j, k, a, b);
            if (v > best.v) best = {v, i, j, k, a, b};
          }
        found.push_back(best);
      }
  std::sort(found.begin(), found.end(), [](const Candidate& l, const Candidate& r) { return l.v > r.v; });
  double best = -INFINITY;
  for (std::size_t t = 0; t < std::min<std::size_t>(8, found.size()); ++t) {
    Candidate cand = found[t];
    for (double h = 0.05; h > 1e-12; h *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int dx = -1; dx <= 1; ++dx)
          for (int dy = -1; dy <= 1; ++dy) {
            if (!dx && !dy) continue;
            const double a = cand.a + dx * h, b = cand.b + dy * h;
            const double v = value(cand.i, cand.j, cand.k, a, b);
            if (v > cand.v + 1e-15) {
              cand.v = v;
              cand.a = a;
              cand.b = b;
              moved = true;
            }
          }
      }
    }
    best = std::max(best, cand.v);
  }
  return best;
}

void check_sandwich(const SolveReport& r) {
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].phi <= r.trace[i].upper_bound + 1e-9);
    if (i > 0) CHECK(r.trace[i].upper_bound <= r.trace[i - 1].upper_bound + 1e-12);
  }
  CHECK(r.phi_value <= r.upper_bound + 1e-9);
}

}  // namespace

TEST_CASE("configuration validation") {
  SolveConfig c;
  CHECK(c.epsilon == 1e-10);
  CHECK(c.gamma == 1e-8);
  CHECK(c.max_iter == 5000);
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolveConfig{};
  c.gamma = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolveConfig{};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("one-point space") {
  const DesignSpace s = custom_matrix_model({{2.0}});
  const SolveReport r = solve(Criterion::d(), s, tight());
  CHECK(r.design[0] == 1.0);
  CHECK(r.gap == doctest::Approx(0.0));
  CHECK(r.iterations == 1);
  CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
}

TEST_CASE("optimum matches brute force on a 21-point quadratic grid") {
  const DesignSpace s = quadratic21();
  for (const auto& c : {Criterion::d(), Criterion::a(), Criterion::ek(1), Criterion::ek(2)}) {
    const SolveReport r = solve(c, s, tight());
    REQUIRE(r.stop_reason == StopReason::GapBelowEpsilon);
    const double oracle_opt = brute_force(c, s);
    CHECK(std::abs(r.phi_value - oracle_opt) <= 1e-10 + 1e-8);
    CHECK(r.phi_value <= r.upper_bound + 1e-9);
    check_sandwich(r);
    if (c.kind != Criterion::Kind::Ek) CHECK(r.equivalence_gap <= 1e-3);
  }
}

TEST_CASE("compartment model D and E1 optima") {
  const DesignSpace s = compartment_model(Vector{21.8, 0.05884, 4.298}, make_grid(0.01, 24.0, 0.01));
  SolveConfig config;
  config.epsilon = 1e-8;
  const SolveReport d = solve(Criterion::d(), s, config);
  CHECK(d.stop_reason == StopReason::GapBelowEpsilon);
  CHECK(d.phi_value == doctest::Approx(11.739).epsilon(1e-3));
  CHECK(d.equivalence_gap <= 1e-3);
  const auto support = pruned(d.design, 1e-3).support();
  REQUIRE(support.size() == 3);
  CHECK(s.coords(support[0])[0] == doctest::Approx(0.23).epsilon(0.02));
  CHECK(s.coords(support[1])[0] == doctest::Approx(1.39).epsilon(0.02));
  CHECK(s.coords(support[2])[0] == doctest::Approx(18.42).epsilon(0.02));
  check_sandwich(d);

  const SolveReport e = solve(Criterion::ek(1), s, config);
  CHECK(e.phi_value == doctest::Approx(0.3163).epsilon(1e-3));
  check_sandwich(e);
}

TEST_CASE("E_k sweep on the symmetric cube supports") {
  const auto q1 = qcube_symmetric_space(1);
  const EkSweep s1 = solve_ek_sweep(q1.space, tight());
  REQUIRE(s1.entries.size() == 3);
  CHECK(s1.values()[0] == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(s1.values()[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s1.values()[2] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(s1.monotone);

  const auto q2 = qcube_symmetric_space(2);
  const EkSweep s2 = solve_ek_sweep(q2.space, tight());
  const Vector expected{0.2, 0.407, 1.0, 2.0, 3.0, 6.0};
  for (std::size_t k = 0; k < 6; ++k) CHECK(s2.values()[k] == doctest::Approx(expected[k]).epsilon(1e-3));
  for (std::size_t k = 1; k < 6; ++k) CHECK(s2.values()[k] >= s2.values()[k - 1] - 1e-9);

  const EkSweep par = solve_ek_sweep(q2.space, tight(), true);
  CHECK(par.values() == s2.values());
}

TEST_CASE("maximin on the cube supports") {
  const auto q1 = qcube_symmetric_space(1);
  const SolveReport r = solve_maximin(q1.space, tight());
  const Vector mass = q1.support.class_mass(r.design);
  CHECK(mass[0] == doctest::Approx(0.3532).epsilon(1e-3));
  CHECK(mass[1] == doctest::Approx(0.6468).epsilon(1e-3));
  REQUIRE(r.psi.has_value());
  CHECK(*r.psi == doctest::Approx(0.7646).epsilon(1e-3));

  const auto q2 = qcube_symmetric_space(2);
  const EkSweep sweep = solve_ek_sweep(q2.space, tight());
  const SolveReport r2 = solve_maximin(q2.space, tight(), sweep.values());
  double psi = INFINITY;
  for (std::size_t k = 1; k <= 6; ++k)
    psi = std::min(psi, phi(Criterion::ek(k), q2.space, r2.design) / sweep.values()[k - 1]);
  CHECK(std::abs(*r2.psi - psi) <= 1e-9);
  CHECK(*r2.psi == doctest::Approx(0.7060).epsilon(1e-3));
  CHECK(r2.efficiencies.size() == 6);

  CHECK_THROWS_AS(solve_maximin(q2.space, tight(), Vector{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("maximin with one parameter is the D-optimal design") {
  const DesignSpace s = custom_matrix_model({{1.0}, {3.0}, {2.0}});
  const SolveReport m = solve_maximin(s, tight());
  const SolveReport d = solve(Criterion::d(), s, tight());
  CHECK(*m.psi == doctest::Approx(1.0));
  CHECK(m.design[1] == doctest::Approx(d.design[1]));
  CHECK(m.design[1] == doctest::Approx(1.0));
}

TEST_CASE("averaged criteria") {
  const Vector times = make_grid(0.25, 24.0, 0.25);
  const Vector t1{21.8, 0.05884, 4.298}, t2{18.0, 0.08, 3.0};
  SolveConfig config;
  config.epsilon = 1e-9;

  for (const auto& base : {Criterion::d(), Criterion::a(), Criterion::ek(1)}) {
    const Prior single{{compartment_model(t1, times)}, {1.0}};
    const SolveReport local = solve(base, single.spaces[0], config);
    const SolveReport ave = solve_ave(base, single, config);
    CHECK(std::abs(ave.phi_value - local.phi_value) <= 1e-9 * std::max(1.0, local.phi_value) + 2e-9);
  }

  const Prior pair{{compartment_model(t1, times), compartment_model(t2, times)}, {0.5, 0.5}};
  const SolveReport ave = solve_ave(Criterion::d(), pair, config);
  check_sandwich(ave);
  const SolveReport a1 = solve(Criterion::d(), pair.spaces[0], config);
  const SolveReport a2 = solve(Criterion::d(), pair.spaces[1], config);
  CHECK(ave.phi_value >= ave_phi(Criterion::d(), pair, a1.design) - 1e-9);
  CHECK(ave.phi_value >= ave_phi(Criterion::d(), pair, a2.design) - 1e-9);
  CHECK(ave.phi_value <= 0.5 * (a1.phi_value + a2.phi_value) + 1e-9);
  CHECK(std::isnan(ave.equivalence_gap));
}

TEST_CASE("D-optimal design under an A-level constraint") {
  const DesignSpace s = poly_model(4, make_grid(-1.0, 1.0, 0.01));
  const SolveConfig config = tight();
  const double d_star = solve(Criterion::d(), s, config).phi_value;
  const double a_star = solve(Criterion::a(), s, config).phi_value;
  CHECK(d_star == doctest::Approx(0.1339).epsilon(1e-3));
  CHECK(a_star == doctest::Approx(0.0053).epsilon(1e-2));

  SUBCASE("tiny threshold gives the D-optimum") {
    const SolveReport r = solve_d_given_a(s, 1e-6, config, a_star);
    CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
    CHECK(r.phi_value == doctest::Approx(d_star).epsilon(1e-8));
    check_sandwich(r);
  }
  SUBCASE("binding threshold") {
    const SolveReport r = solve_d_given_a(s, 0.005, config, a_star);
    CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
    CHECK(r.phi_value == doctest::Approx(0.1317).epsilon(1e-3));
    REQUIRE(r.a_value.has_value());
    CHECK(*r.a_value >= 0.005 + config.delta_a);
    CHECK(r.a_threshold == 0.005);
    const Design shown = pruned(r.design, 1e-4);
    const auto support = shown.support();
    REQUIRE(support.size() == 5);
    const Vector weights{0.1623, 0.2194, 0.2366, 0.2194, 0.1623};
    for (std::size_t i = 0; i < 5; ++i) CHECK(shown[support[i]] == doctest::Approx(weights[i]).epsilon(2e-3));
    check_sandwich(r);
    for (const auto& e : r.trace) CHECK(e.a_gap.has_value());
  }
  SUBCASE("threshold close to the A-optimum") {
    const double a = a_star * (1.0 - 1e-4);
    const SolveReport r = solve_d_given_a(s, a, config, a_star);
    CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
    CHECK(*r.a_value >= a + config.delta_a);
  }
  SUBCASE("unattainable threshold with the A-optimum known") {
    const SolveReport r = solve_d_given_a(s, 0.006, config, a_star);
    CHECK(r.stop_reason == StopReason::InfeasibleConstraint);
    CHECK(r.iterations == 0);
  }
  SUBCASE("unattainable threshold found by the LP") {
    SolveConfig short_run = config;
    short_run.max_iter = 200;
    const SolveReport r = solve_d_given_a(s, 0.006, short_run);
    CHECK(r.stop_reason == StopReason::InfeasibleConstraint);
  }
}

TEST_CASE("efficiency sweep") {
  const DesignSpace s = poly_model(4, make_grid(-1.0, 1.0, 0.01));
  const EfficiencySweep sweep = efficiency_sweep(s, {0.005, 0.002, 0.004, 0.0052, 0.003}, tight());
  REQUIRE(sweep.rows.size() == 5);
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    CHECK(sweep.rows[i].a > sweep.rows[i - 1].a);
    CHECK(sweep.rows[i].eff_d <= sweep.rows[i - 1].eff_d + 1e-6);
  }
  for (const auto& r : sweep.rows) {
    CHECK(r.error.empty());
    CHECK(r.eff_a >= r.a / sweep.phi_a_star - 1e-8);
    CHECK(r.eff_d <= 1.0 + 1e-9);
  }
  CHECK(sweep.rows[0].eff_d == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sweep.rows[3].eff_d == doctest::Approx(0.9836).epsilon(1e-3));
  CHECK(sweep.rows[3].eff_a == doctest::Approx(0.9434).epsilon(2e-3));

  const EfficiencySweep bad = efficiency_sweep(s, {0.003, 0.01}, tight());
  CHECK(bad.rows[0].stop_reason == StopReason::GapBelowEpsilon);
  CHECK(bad.rows[1].stop_reason == StopReason::InfeasibleConstraint);
}

TEST_CASE("iteration limit returns the best design so far") {
  const DesignSpace s = poly_model(4, make_grid(-1.0, 1.0, 0.01));
  SolveConfig config = tight();
  config.max_iter = 4;
  const SolveReport r = solve(Criterion::a(), s, config);
  CHECK(r.stop_reason == StopReason::IterLimit);
  CHECK(r.iterations == 4);
  double best = -INFINITY;
  for (const auto& e : r.trace) best = std::max(best, e.phi);
  CHECK(r.phi_value == best);
  CHECK(phi(Criterion::a(), s, r.design) == doctest::Approx(r.phi_value));
}

TEST_CASE("equivalence stop") {
  const DesignSpace s = poly_model(4, make_grid(-1.0, 1.0, 0.01));
  SolveConfig config = tight();
  config.stop_on_equivalence = 1e-2;
  const SolveReport r = solve(Criterion::d(), s, config);
  CHECK(r.stop_reason == StopReason::EquivalenceStop);
  CHECK(r.equivalence_gap < 1e-2);
  CHECK(r.iterations < solve(Criterion::d(), s, tight()).iterations);
}

TEST_CASE("cost constraints are honored") {
  const DesignSpace s = quadratic21();
  SolveConfig config = tight();
  Vector centre(s.size(), 0.0);
  centre[10] = 1.0;
  config.cost_constraints.push_back({centre, 0.5});
  const SolveReport r = solve(Criterion::d(), s, config);
  CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
  CHECK(r.design[10] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(r.design[0] == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(r.design[20] == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("singular starting designs are regularized") {
  const DesignSpace s = quadratic21();
  SolveConfig config = tight();
  config.initial_designs = {point_mass(s, "0.3")};
  for (const auto& c : {Criterion::d(), Criterion::a()}) {
    const SolveReport r = solve(c, s, config);
    CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
    CHECK(r.phi_value == doctest::Approx(solve(c, s, tight()).phi_value).epsilon(1e-9));
  }
  const std::vector<std::string> sparse{"-1", "1"};
  config.initial_designs = {uniform_on(s, sparse)};
  CHECK(solve(Criterion::d(), s, config).stop_reason == StopReason::GapBelowEpsilon);
}

TEST_CASE("repeated runs are identical") {
  const auto q2 = qcube_symmetric_space(2);
  const SolveReport a = solve(Criterion::ek(2), q2.space, tight());
  const SolveReport b = solve(Criterion::ek(2), q2.space, tight());
  CHECK(a.design.weights() == b.design.weights());
  CHECK(a.phi_value == b.phi_value);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("E_k solves never need regularization") {
  const DesignSpace s = quadratic21();
  SolveConfig config = tight();
  config.gamma = 0.0;
  config.initial_designs = {point_mass(s, "0")};
  const SolveReport r = solve(Criterion::ek(1), s, config);
  CHECK(r.stop_reason == StopReason::GapBelowEpsilon);
  CHECK(r.phi_value == doctest::Approx(brute_force(Criterion::ek(1), s)).epsilon(1e-8));
}

TEST_CASE("display pruning") {
  const Design d = Design::from_weights({0.5, 0.5 - 1e-8, 1e-8});
  const Design p = pruned(d);
  CHECK(p[2] == 0.0);
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
  const Design tiny = Design::from_weights({1e-7, 1.0 - 1e-7});
  CHECK(pruned(tiny, 0.5)[1] == 1.0);
  CHECK(pruned(Design::from_weights({0.5, 0.5}), 0.9).weights() == Vector{0.5, 0.5});
}
