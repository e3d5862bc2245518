#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "optdesign/criteria.hpp"
#include "optdesign/lp.hpp"
#include "oracle.hpp"

using namespace optdesign;

namespace {

// Exact optimum by vertex enumeration: at an optimal vertex with support S
// exactly |S| objective cuts are active, so solve every square system.
double enumerate_vertices(const CutLP& lp) {
  const std::size_t n = lp.n_points, m = lp.objective_cuts.size();
  double best = -INFINITY;
  const std::size_t limit = std::min(n, m);
  for (std::size_t s = 1; s <= limit; ++s) {
    std::vector<bool> pick_pts(n, false), pick_cuts(m, false);
    std::fill(pick_pts.begin(), pick_pts.begin() + static_cast<std::ptrdiff_t>(s), true);
    do {
      std::fill(pick_cuts.begin(), pick_cuts.end(), false);
      std::fill(pick_cuts.begin(), pick_cuts.begin() + static_cast<std::ptrdiff_t>(s), true);
      std::vector<std::size_t> pts;
      for (std::size_t i = 0; i < n; ++i)
        if (pick_pts[i]) pts.push_back(i);
      do {
        std::vector<std::size_t> rows;
        for (std::size_t j = 0; j < m; ++j)
          if (pick_cuts[j]) rows.push_back(j);
        const auto d = static_cast<Eigen::Index>(s);
        oracle::Mat a = oracle::Mat::Zero(d + 1, d + 1);
        oracle::Vec b = oracle::Vec::Zero(d + 1);
        for (Eigen::Index r = 0; r < d; ++r) {
          for (Eigen::Index c = 0; c < d; ++c) a(r, c) = lp.objective_cuts[rows[r]][pts[c]];
          a(r, d) = -1.0;
        }
        for (Eigen::Index c = 0; c < d; ++c) a(d, c) = 1.0;
        b(d) = 1.0;
        Eigen::FullPivLU<oracle::Mat> lu(a);
        if (!lu.isInvertible()) continue;
        const oracle::Vec x = lu.solve(b);
        bool ok = true;
        Vector xi(n, 0.0);
        for (Eigen::Index c = 0; c < d; ++c) {
          if (x(c) < -1e-12) ok = false;
          xi[pts[c]] = x(c);
        }
        if (!ok) continue;
        for (const auto& h : lp.objective_cuts)
          if (oracle::dot(h, xi) < x(d) - 1e-12) ok = false;
        if (ok) best = std::max(best, x(d));
      } while (std::prev_permutation(pick_cuts.begin(), pick_cuts.end()));
    } while (std::prev_permutation(pick_pts.begin(), pick_pts.end()));
  }
  return best;
}

double min_cut(const CutLP& lp, const Vector& xi) {
  double t = INFINITY;
  for (const auto& h : lp.objective_cuts) t = std::min(t, oracle::dot(h, xi));
  return t;
}

void check_feasible(const CutLP& lp, const LPSolution& sol) {
  REQUIRE(sol.status == LPStatus::Optimal);
  double total = 0.0;
  for (double w : sol.xi) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
  for (const auto& h : lp.objective_cuts) CHECK(oracle::dot(h, sol.xi) >= sol.t_star - 1e-8);
  for (const auto& l : lp.level_cuts) CHECK(oracle::dot(l.coefficients, sol.xi) >= l.threshold - 1e-8);
  for (const auto& e : lp.equality_rows) CHECK(std::abs(oracle::dot(e.coefficients, sol.xi) - e.rhs) <= 1e-8);
}

CutLP random_lp(std::mt19937& rng, std::size_t n, std::size_t cuts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CutLP lp;
  lp.n_points = n;
  for (std::size_t j = 0; j < cuts; ++j) {
    Vector h(n);
    for (double& v : h) v = u(rng);
    lp.objective_cuts.push_back(std::move(h));
  }
  return lp;
}

}  // namespace

TEST_CASE("small examples") {
  CutLP one;
  one.n_points = 2;
  one.objective_cuts = {{1.0, 2.0}};
  const LPSolution a = solve_lp(one);
  CHECK(a.status == LPStatus::Optimal);
  CHECK(a.t_star == doctest::Approx(2.0));
  CHECK(a.xi[1] == doctest::Approx(1.0));

  CutLP two;
  two.n_points = 2;
  two.objective_cuts = {{1.0, 0.0}, {0.0, 1.0}};
  const LPSolution b = solve_lp(two);
  CHECK(b.t_star == doctest::Approx(0.5));
  CHECK(b.xi[0] == doctest::Approx(0.5));
  CHECK(b.xi[1] == doctest::Approx(0.5));
}

TEST_CASE("problem validation") {
  CutLP empty;
  empty.n_points = 2;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  CutLP ragged;
  ragged.n_points = 2;
  ragged.objective_cuts = {{1.0}};
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
  CutLP nonfinite;
  nonfinite.n_points = 1;
  nonfinite.objective_cuts = {{NAN}};
  CHECK_THROWS_AS(nonfinite.validate(), std::invalid_argument);
}

TEST_CASE("random instances match vertex enumeration") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const CutLP lp = random_lp(rng, 8, 5);
    const LPSolution sol = solve_lp(lp);
    check_feasible(lp, sol);
    const double exact = enumerate_vertices(lp);
    CHECK(std::abs(sol.t_star - exact) <= 1e-10);
    CHECK(std::abs(min_cut(lp, sol.xi) - sol.t_star) <= 1e-10);
  }
}

TEST_CASE("objective duals certify optimality") {
  std::mt19937 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const CutLP lp = random_lp(rng, 30, 12);
    const LPSolution sol = solve_lp(lp);
    check_feasible(lp, sol);
    REQUIRE(sol.dual_values.size() == 13);
    double total = 0.0;
    Vector mixed(lp.n_points, 0.0);
    for (std::size_t j = 0; j < 12; ++j) {
      const double y = std::abs(sol.dual_values[j]);
      total += y;
      for (std::size_t i = 0; i < lp.n_points; ++i) mixed[i] += y * lp.objective_cuts[j][i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*std::max_element(mixed.begin(), mixed.end()) == doctest::Approx(sol.t_star).epsilon(1e-9));
  }
}

TEST_CASE("appending a cut never raises the bound") {
  std::mt19937 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    CutLP lp = random_lp(rng, 40, 1);
    double previous = solve_lp(lp).t_star;
    for (int j = 0; j < 15; ++j) {
      lp.objective_cuts.push_back(random_lp(rng, 40, 1).objective_cuts[0]);
      const LPSolution sol = solve_lp(lp);
      check_feasible(lp, sol);
      CHECK(sol.t_star <= previous + 1e-10);
      previous = sol.t_star;
    }
  }
}

TEST_CASE("scaling the cuts scales the bound") {
  std::mt19937 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const CutLP lp = random_lp(rng, 25, 6);
    const LPSolution base = solve_lp(lp);
    for (double alpha : {1e-3, 7.0, 1e4}) {
      CutLP scaled = lp;
      for (auto& h : scaled.objective_cuts)
        for (double& v : h) v *= alpha;
      const LPSolution sol = solve_lp(scaled);
      CHECK(sol.t_star == doctest::Approx(alpha * base.t_star).epsilon(1e-10));
      CHECK(std::abs(min_cut(scaled, base.xi) - sol.t_star) <= 1e-8 * alpha);
    }
  }
}

TEST_CASE("level cuts and equality rows") {
  CutLP lp;
  lp.n_points = 3;
  lp.objective_cuts = {{1.0, 0.0, 0.0}};
  lp.level_cuts = {{{0.0, 1.0, 1.0}, 0.4}};
  LPSolution sol = solve_lp(lp);
  check_feasible(lp, sol);
  CHECK(sol.t_star == doctest::Approx(0.6));

  lp.equality_rows = {{{0.0, 1.0, 0.0}, 0.3}};
  sol = solve_lp(lp);
  check_feasible(lp, sol);
  CHECK(sol.t_star == doctest::Approx(0.6));
  CHECK(sol.xi[1] == doctest::Approx(0.3));

  lp.level_cuts[0].threshold = 1.5;
  CHECK(solve_lp(lp).status == LPStatus::Infeasible);

  CutLP clash;
  clash.n_points = 2;
  clash.objective_cuts = {{1.0, 1.0}};
  clash.equality_rows = {{{1.0, 0.0}, 2.0}};
  CHECK(solve_lp(clash).status == LPStatus::Infeasible);
}

TEST_CASE("incremental solver agrees with fresh solves") {
  std::mt19937 rng(35);
  const DesignSpace s = compartment_model(Vector{21.8, 0.05884, 4.298}, make_grid(0.05, 24.0, 0.05));
  CutLPSolver inc(s.size());
  for (int j = 0; j < 30; ++j) {
    const Design mu = Design::from_weights(oracle::random_weights(rng, s.size(), 5), true);
    inc.add_objective_cut(cut(Criterion::ek(1), s, mu).coefficients);
    if (j % 7 == 3) inc.add_level_cut(cut(Criterion::ek(2), s, mu).coefficients, 1e-3);
    const LPSolution a = inc.solve();
    const LPSolution b = solve_lp(inc.problem());
    REQUIRE(a.status == LPStatus::Optimal);
    check_feasible(inc.problem(), a);
    CHECK(a.t_star == doctest::Approx(b.t_star).epsilon(1e-9));
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937 rng(36);
  const CutLP lp = random_lp(rng, 200, 20);
  const LPSolution a = solve_lp(lp), b = solve_lp(lp);
  CHECK(a.t_star == b.t_star);
  CHECK(a.xi == b.xi);
}

TEST_CASE("LP listing") {
  CutLP lp;
  lp.n_points = 2;
  lp.objective_cuts = {{1.0, 2.0}};
  lp.level_cuts = {{{0.5, 0.0}, 0.25}};
  const std::string text = dump_lp(lp);
  CHECK(text.find("maximize t") != std::string::npos);
  CHECK(text.find("cut0: + 1 x0 + 2 x1 - t >= 0") != std::string::npos);
  CHECK(text.find("level0: + 0.5 x0 >= 0.25") != std::string::npos);
  CHECK(text.find("simplex: + x0 + x1 = 1") != std::string::npos);
}

TEST_CASE("24000 points and 150 cuts within a minute") {
  const DesignSpace s = compartment_model(Vector{21.8, 0.05884, 4.298}, make_grid(0.001, 24.0, 0.001));
  REQUIRE(s.size() == 24000);
  std::mt19937 rng(37);
  CutLP lp;
  lp.n_points = s.size();
  for (int j = 0; j < 150; ++j) {
    const Design mu = Design::from_weights(oracle::random_weights(rng, s.size(), 4 + j % 5), true);
    lp.objective_cuts.push_back(cut(Criterion::d(), s, info_matrix(s, mu).regularized_if_singular(1e-8)).coefficients);
  }
  const auto start = std::chrono::steady_clock::now();
  const LPSolution sol = solve_lp(lp);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("solve time " << seconds << " s");
  check_feasible(lp, sol);
  CHECK(seconds < 60.0);
}
