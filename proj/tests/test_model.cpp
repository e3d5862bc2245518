#include <cmath>
#include <random>

#include "doctest.h"
#include "optdesign/criteria.hpp"
#include "optdesign/cutter.hpp"
#include "optdesign/model.hpp"
#include "oracle.hpp"

using namespace optdesign;

namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_features(const DesignSpace& s, std::size_t i, const Vector& expected) {
  const auto f = s.feature(i);
  REQUIRE(f.size() == expected.size());
  for (std::size_t j = 0; j < f.size(); ++j) CHECK(f[j] == doctest::Approx(expected[j]));
}

}  // namespace

TEST_CASE("polynomial features") {
  const Vector g1{-1.0, 1.0};
  const DesignSpace lin = poly_model(1, g1);
  CHECK(lin.dim() == 2);
  check_features(lin, 0, {1.0, -1.0});
  check_features(lin, 1, {1.0, 1.0});

  const Vector g2{-1.0, 0.0, 1.0};
  check_features(poly_model(2, g2), 1, {1.0, 0.0, 0.0});

  const Vector grid = make_grid(-1.0, 1.0, 0.01);
  const DesignSpace quartic = poly_model(4, grid);
  CHECK(quartic.size() == 201);
  CHECK(quartic.dim() == 5);
  CHECK(quartic.label(0) == "-1");
  CHECK(quartic.label(32) == "-0.68");
  CHECK(quartic.label(100) == "0");
  CHECK(quartic.full_rank());

  CHECK_THROWS_AS(poly_model(0, g2), std::invalid_argument);
  CHECK_THROWS_AS(poly_model(2, Vector{}), std::invalid_argument);
}

TEST_CASE("grids land on their decimal labels") {
  const Vector g = make_grid(0.001, 24.0, 0.001);
  CHECK(g.size() == 24000);
  CHECK(g.back() == 24.0);
  CHECK(format_coordinate(g[228]) == "0.229");
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("q-cube features and dimensions") {
  const Vector x1{0.5};
  const Vector f1 = qcube_features(x1);
  CHECK(f1 == Vector{1.0, 0.25, 0.5});

  const Vector x2{1.0, -1.0};
  CHECK(qcube_features(x2) == Vector{1.0, 1.0, 1.0, 1.0, -1.0, -1.0});

  for (int q = 1; q <= 5; ++q) {
    const auto s = qcube_symmetric_space(q);
    const std::size_t p = 1 + 2 * q + q * (q - 1) / 2;
    CHECK(s.space.dim() == p);
    CHECK(s.space.full_rank());
  }
  CHECK(qcube_symmetric_space(3).space.dim() == 10);

  const std::vector<Vector> outside{{1.5}};
  CHECK_THROWS_AS(qcube_model(1, outside), std::invalid_argument);
  const std::vector<Vector> wrong_dim{{0.0, 0.0}};
  CHECK_THROWS_AS(qcube_model(1, wrong_dim), std::invalid_argument);
}

TEST_CASE("symmetric support classes partition the cube lattice") {
  for (int q = 1; q <= 5; ++q) {
    const auto s = qcube_symmetric_space(q);
    std::size_t total = 1;
    for (int i = 0; i < q; ++i) total *= 3;
    CHECK(s.space.size() == total);
    REQUIRE(s.support.classes.size() == static_cast<std::size_t>(q) + 1);

    std::vector<int> seen(total, 0);
    for (std::size_t c = 0; c <= static_cast<std::size_t>(q); ++c) {
      CHECK(s.support.classes[c].size() == binomial(q, c) << c);
      for (std::size_t i : s.support.classes[c]) {
        ++seen[i];
        std::size_t nonzero = 0;
        for (double v : s.space.coords(i)) nonzero += v != 0.0;
        CHECK(nonzero == c);
      }
    }
    for (int v : seen) CHECK(v == 1);
  }
  const auto q1 = qcube_symmetric_space(1);
  CHECK(q1.space.label(0) == "-1");
  CHECK(q1.support.classes[0].size() == 1);
  CHECK(q1.support.classes[1].size() == 2);
}

TEST_CASE("compartment features match finite differences") {
  const Vector theta0{21.8, 0.05884, 4.298};
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ux(0.01, 24.0);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const double x = ux(rng);
    Vector theta{theta0[0] * scale(rng), theta0[1] * scale(rng), theta0[2] * scale(rng)};
    const Vector f = compartment_gradient(x, theta);
    for (std::size_t i = 0; i < 3; ++i) {
      const double h = 1e-5;
      Vector up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      const double fd = (compartment_response(x, up) - compartment_response(x, down)) / (2.0 * h);
      CHECK(std::abs(fd - f[i]) <= 1e-6 * std::max(1.0, std::abs(f[i])));
    }
  }
}

TEST_CASE("compartment informativeness vanishes at the origin") {
  const Vector theta0{21.8, 0.05884, 4.298};
  const Vector f = compartment_gradient(1e-12, theta0);
  for (double v : f) CHECK(std::abs(v) < 1e-9);

  const Vector grid = make_grid(0.001, 24.0, 0.001);
  const DesignSpace s = compartment_model(theta0, grid);
  CHECK(s.size() == 24000);
  CHECK(s.dim() == 3);

  const Vector bad{0.0, 1.0};
  CHECK_THROWS_AS(compartment_model(theta0, bad), std::invalid_argument);
  const Vector equal_rates{21.8, 1.0, 1.0};
  CHECK_THROWS_AS(compartment_model(equal_rates, grid), std::invalid_argument);
}

TEST_CASE("generic Jacobian linearization agrees with the analytic one") {
  const Vector theta0{21.8, 0.05884, 4.298};
  const ResponseFn eta = [](std::span<const double> x, std::span<const double> th) {
    return compartment_response(x[0], th);
  };
  std::vector<Vector> points;
  Vector times;
  for (double x = 0.25; x <= 24.0; x += 1.75) {
    points.push_back({x});
    times.push_back(x);
  }
  const DesignSpace numeric = jacobian_model(eta, theta0, points);
  const DesignSpace analytic = compartment_model(theta0, times);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(numeric.feature(i)[j] == doctest::Approx(analytic.feature(i)[j]).epsilon(1e-6));
}

TEST_CASE("design constructors") {
  const Vector g{-1.0, -0.5, 0.5, 1.0};
  const DesignSpace s = poly_model(1, g);
  const Design u = uniform_design(s);
  for (double w : u.weights()) CHECK(w == 0.25);

  const Design pm = point_mass(s, "0.5");
  CHECK(pm[2] == 1.0);
  CHECK(pm.support() == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(point_mass(s, "0.7"), std::invalid_argument);

  const std::vector<Design> two{point_mass(s, "-1"), point_mass(s, "1")};
  const Vector half{0.5, 0.5};
  const Design mix = mixture(two, half);
  CHECK(mix[0] == 0.5);
  CHECK(mix[3] == 0.5);
  const Vector negative{1.5, -0.5};
  CHECK_THROWS_AS(mixture(two, negative), std::invalid_argument);

  const std::vector<std::string> labels{"-1", "1"};
  const Design on = uniform_on(s, labels);
  CHECK(on[0] == 0.5);
  CHECK(on[1] == 0.0);
}

TEST_CASE("weight validation and clamping") {
  const Design clamped = Design::from_weights({0.5, 0.5 + 1e-13, -1e-13});
  CHECK(clamped[2] == 0.0);
  CHECK(clamped[0] + clamped[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(Design::from_weights({1.1, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Design::from_weights({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(Design::from_weights({NAN, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Design::from_weights({}), std::invalid_argument);
  CHECK(Design::from_weights({2.0, 6.0}, true)[1] == 0.75);

  const Vector exact{0.1, 0.2, 0.7000000000000001};
  CHECK(Design::from_weights(exact).weights() == exact);
}

TEST_CASE("design spaces reject malformed input") {
  CHECK_THROWS_AS(custom_matrix_model({{1.0}, {2.0}}, {"a", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(custom_matrix_model({{1.0, 2.0}, {2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(custom_matrix_model({{1.0, NAN}}), std::invalid_argument);
  CHECK_THROWS_AS(custom_matrix_model({}), std::invalid_argument);

  const DesignSpace custom = custom_matrix_model({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
  CHECK(custom.label(2) == "2");
  CHECK(custom.coords(0).empty());
  CHECK(custom.full_rank());
  CHECK(custom.index_of("1") == std::optional<std::size_t>(1));
  CHECK_FALSE(custom.index_of("9").has_value());

  const DesignSpace deficient = custom_matrix_model({{1.0, 2.0}, {2.0, 4.0}, {-1.0, -2.0}});
  CHECK_FALSE(deficient.full_rank());
  const DesignSpace too_few = custom_matrix_model({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  CHECK_FALSE(too_few.full_rank());
}

TEST_CASE("redistribution preserves class masses") {
  const auto s = qcube_symmetric_space(1);
  // Points are ordered -1, 0, 1.
  const Design xi = Design::from_weights({0.5, 0.3532, 0.1468});
  const Design r = redistribute_uniform(xi, s.support);
  CHECK(r[1] == doctest::Approx(0.3532));
  CHECK(r[0] == doctest::Approx(0.3234));
  CHECK(r[2] == doctest::Approx(0.3234));
  CHECK(redistribute_uniform(r, s.support).weights() == r.weights());

  std::mt19937 rng(4);
  for (int q = 1; q <= 3; ++q) {
    const auto sq = qcube_symmetric_space(q);
    for (int trial = 0; trial < 20; ++trial) {
      const Design d = Design::from_weights(oracle::random_weights(rng, sq.space.size()), true);
      const Design e = redistribute_uniform(d, sq.support);
      const Vector before = sq.support.class_mass(d), after = sq.support.class_mass(e);
      for (std::size_t c = 0; c < before.size(); ++c) CHECK(std::abs(before[c] - after[c]) <= 1e-15);
    }
  }
  CHECK_THROWS_AS(redistribute_uniform(Design::from_weights({0.5, 0.5}), s.support), std::invalid_argument);
}

TEST_CASE("redistribution never lowers a criterion and keeps it at the optimum") {
  std::mt19937 rng(8);
  const std::vector<Criterion> family{Criterion::d(), Criterion::a(), Criterion::ek(1), Criterion::ek(2)};
  for (int q = 1; q <= 2; ++q) {
    const auto sq = qcube_symmetric_space(q);
    for (const auto& c : family) {
      for (int trial = 0; trial < 20; ++trial) {
        const Design d = Design::from_weights(oracle::random_weights(rng, sq.space.size()), true);
        const Design e = redistribute_uniform(d, sq.support);
        CHECK(phi(c, sq.space, e) >= phi(c, sq.space, d) - 1e-12);
      }
      SolveConfig config;
      config.epsilon = 1e-10;
      const SolveReport opt = solve(c, sq.space, config);
      const Design sym = redistribute_uniform(opt.design, sq.support);
      CHECK(std::abs(phi(c, sq.space, sym) - opt.phi_value) <= 1e-9);
    }
  }
}
