#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "moscolab/errors.hpp"
#include "moscolab/family.hpp"
#include "moscolab/metric_space.hpp"

#include "oracles.hpp"

using namespace moscolab;

namespace {

MetricMeasureSpace two_point_space(double dist = 1.0) {
  return MetricMeasureSpace({{0.0, dist}, {dist, 0.0}}, {1.0, 1.0});
}

MetricMeasureSpace line_space(std::size_t n, double step = 1.0) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rows[i][j] = std::abs(static_cast<double>(i) - static_cast<double>(j)) * step;
    }
  }
  return MetricMeasureSpace(rows, std::vector<double>(n, 1.0));
}

}  // namespace

TEST_CASE("validate_metric accepts a two-point metric") {
  const MetricValidation v = validate_metric({{0.0, 1.0}, {1.0, 0.0}});
  CHECK(v.ok());
}

TEST_CASE("validate_metric reports the triangle violation with its worst triple") {
  const MetricValidation v = validate_metric({{0, 3, 1}, {3, 0, 1}, {1, 1, 0}});
  CHECK_FALSE(v.ok());
  const MetricViolation* worst = v.worst_triangle();
  REQUIRE(worst != nullptr);
  CHECK(worst->value == 3.0);
  CHECK(worst->bound == 2.0);
}

TEST_CASE("validate_metric flags a perturbed diagonal") {
  const MetricValidation v = validate_metric({{0.1, 1.0}, {1.0, 0.0}});
  CHECK_FALSE(v.ok());
  bool found = false;
  for (const auto& viol : v.violations) {
    if (viol.kind == MetricViolation::Kind::NonzeroDiagonal && viol.i == 0) found = true;
  }
  CHECK(found);
}

TEST_CASE("validate_metric rejects malformed input") {
  CHECK_THROWS_AS(validate_metric({{0.0, 1.0}}), MalformedInputError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_metric({{0.0, inf}, {inf, 0.0}}), MalformedInputError);
}

TEST_CASE("open and closed balls split the boundary") {
  const MetricMeasureSpace space = two_point_space();
  CHECK(ball(space, 0, 1.0, BallKind::Open).members == std::vector<std::size_t>{0});
  CHECK(ball(space, 0, 1.0, BallKind::Closed).members == std::vector<std::size_t>{0, 1});

  const MetricMeasureSpace line = line_space(3);
  CHECK(ball(line, 1, 1.5, BallKind::Open).members == std::vector<std::size_t>{0, 1, 2});

  CHECK_THROWS_AS(ball(space, 7, 1.0, BallKind::Open), LookupError);
  CHECK_THROWS_AS(ball(space, 0, -1.0, BallKind::Open), ParameterError);
}

TEST_CASE("snowflake transform: fixed values and identity case") {
  DistanceMatrix d(2);
  d.set_symmetric(0, 1, 1.0);
  CHECK(snowflake_transform(d, 0.5)(0, 1) == 1.0);

  d.set_symmetric(0, 1, 0.25);
  CHECK(snowflake_transform(d, 0.5)(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  // alpha = 1 must return d bitwise
  CHECK(snowflake_transform(d, 1.0)(0, 1) == 0.25);

  CHECK_THROWS_AS(snowflake_transform(d, 0.0), ParameterError);
  CHECK_THROWS_AS(snowflake_transform(d, 1.5), ParameterError);
  d.set_symmetric(0, 1, 1.5);
  CHECK_THROWS_AS(snowflake_transform(d, 0.5), DomainError);
}

TEST_CASE("snowflake transform stays a metric and dominates d") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    for (double alpha : {0.999, 0.75, 0.5, 0.2, 1.0}) {
      const DistanceMatrix s = snowflake_transform(d, alpha);
      CHECK(validate_metric(s).ok());
      for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) {
          CHECK(s(i, j) >= d(i, j));
        }
      }
    }
  }
}

TEST_CASE("snowflake family is monotone increasing with the last level as limit") {
  std::mt19937_64 rng(11);
  const DistanceMatrix d = oracles::random_cloud_metric(8, rng);
  const MetricMeasureSpace base(d, std::vector<double>(8, 0.125));
  const MonotoneDistanceFamily family = make_snowflake_family(base, {0.9, 0.7, 0.5});
  CHECK(family.level_count() == 3);
  CHECK(family.limit().max_offdiag_abs_gap(family.level(2)) == 0.0);
  CHECK_THROWS_AS(make_snowflake_family(base, {0.5, 0.7}), ParameterError);
}

TEST_CASE("1d identity grid reproduces the path metric") {
  GridSpec spec;
  spec.dims = {3};
  spec.step = 1.0;
  const DistanceMatrix d = grid_shortest_path_metric(spec, identity_tensor(), 1.0);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 2) == 2.0);
  CHECK(d(1, 2) == 1.0);
}

TEST_CASE("2x2 identity grid: opposite corners at distance 2, matches Floyd-Warshall") {
  GridSpec spec;
  spec.dims = {2, 2};
  spec.step = 1.0;
  const DistanceMatrix d = grid_shortest_path_metric(spec, identity_tensor(), 1.0);
  CHECK(d(0, 3) == 2.0);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> w(4, std::vector<double>(4, inf));
  w[0][1] = w[1][0] = 1.0;  // axis neighbours of the 2x2 grid
  w[0][2] = w[2][0] = 1.0;
  w[1][3] = w[3][1] = 1.0;
  w[2][3] = w[3][2] = 1.0;
  const auto fw = oracles::floyd_warshall(w);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(d(i, j) == fw[i][j]);
    }
  }
}

TEST_CASE("identity grids match the L1-weighted path metric exactly (FW oracle)") {
  for (double step : {1.0, 0.5, 0.25}) {
    GridSpec spec;
    spec.dims = {3, 2, 2};
    spec.step = step;
    const DistanceMatrix d = grid_shortest_path_metric(spec, identity_tensor(), 1.0);
    const std::size_t n = d.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, inf));
    const auto points = grid_points(spec);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double l1 = 0.0;
        int moved = 0;
        for (std::size_t a = 0; a < points[i].size(); ++a) {
          l1 += std::abs(points[i][a] - points[j][a]);
          if (points[i][a] != points[j][a]) ++moved;
        }
        if (moved == 1 && std::abs(l1 - step) < 1e-12) w[i][j] = step;
      }
    }
    const auto fw = oracles::floyd_warshall(w);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(d(i, j) == fw[i][j]);
      }
    }
  }
}

TEST_CASE("heisenberg penalty schedule gives entrywise monotone levels") {
  GridSpec spec;
  spec.dims = {5, 5, 5};
  spec.step = 0.5;
  const MonotoneDistanceFamily family =
      riemannian_grid_family(spec, heisenberg_tensor(), {1.0, 0.5, 0.25}, nullptr, 2);
  REQUIRE(family.level_count() == 3);
  for (std::size_t k = 0; k + 1 < family.level_count(); ++k) {
    for (std::size_t i = 0; i < family.point_count(); ++i) {
      for (std::size_t j = i + 1; j < family.point_count(); ++j) {
        CHECK(family.level(k)(i, j) <= family.level(k + 1)(i, j));
      }
    }
  }
  // limit defaults to the smallest-penalty level
  CHECK(family.limit().max_offdiag_abs_gap(family.level(2)) == 0.0);
}

TEST_CASE("non-monotone penalty schedules are rejected naming the direction") {
  GridSpec spec;
  spec.dims = {2, 2, 2};
  spec.step = 1.0;
  CHECK_THROWS_AS(riemannian_grid_family(spec, heisenberg_tensor(), {0.25, 0.5}),
                  ParameterError);
  // A tensor that shrinks as eps decreases breaks edge monotonicity.
  TensorAt shrinking = [](const std::vector<double>& point, double eps) {
    std::vector<double> g(point.size() * point.size(), 0.0);
    for (std::size_t i = 0; i < point.size(); ++i) g[i * point.size() + i] = eps;
    return g;
  };
  CHECK_THROWS_AS(riemannian_grid_family(spec, shrinking, {1.0, 0.5}), GeneratorError);
}

TEST_CASE("non-positive-definite tensors are a generator error") {
  GridSpec spec;
  spec.dims = {2, 2};
  spec.step = 1.0;
  TensorAt degenerate = [](const std::vector<double>& point, double) {
    return std::vector<double>(point.size() * point.size(), 0.0);
  };
  CHECK_THROWS_AS(grid_shortest_path_metric(spec, degenerate, 1.0), GeneratorError);
}

TEST_CASE("uniform convergence gaps: constant family, snowflake example, singleton subset") {
  std::mt19937_64 rng(3);
  const DistanceMatrix d = oracles::random_cloud_metric(6, rng);

  SUBCASE("all levels equal gives zero gaps") {
    const std::vector<DistanceMatrix> levels{d, d, d};
    const auto gaps = uniform_convergence_gap(levels, d, oracles::all_points(6));
    for (double g : gaps) CHECK(g == 0.0);
  }

  SUBCASE("snowflake levels alpha = 1 - 1/i on d(a,b) = 0.25") {
    DistanceMatrix base(2);
    base.set_symmetric(0, 1, 0.25);
    std::vector<DistanceMatrix> levels;
    for (std::size_t i = 2; i <= 5; ++i) {
      levels.push_back(snowflake_transform(base, 1.0 - 1.0 / static_cast<double>(i)));
    }
    const auto gaps = uniform_convergence_gap(levels, base, {0, 1});
    for (std::size_t k = 0; k < gaps.size(); ++k) {
      const double expected = std::pow(0.25, 1.0 - 1.0 / static_cast<double>(k + 2)) - 0.25;
      CHECK(gaps[k] == doctest::Approx(expected).epsilon(1e-14));
      if (k > 0) CHECK(gaps[k] <= gaps[k - 1]);
    }
  }

  SUBCASE("singleton subset has zero gap at every level") {
    const std::vector<DistanceMatrix> levels{snowflake_transform(d, 0.5)};
    const auto gaps = uniform_convergence_gap(levels, d, {2});
    CHECK(gaps == std::vector<double>{0.0});
  }

  SUBCASE("empty subset is a parameter error") {
    const std::vector<DistanceMatrix> levels{d};
    CHECK_THROWS_AS(uniform_convergence_gap(levels, d, {}), ParameterError);
  }
}

TEST_CASE("family construction enforces the topology pattern") {
  DistanceMatrix base(3);
  base.set_symmetric(0, 1, 0.5);
  base.set_symmetric(0, 2, 0.5);
  base.set_symmetric(1, 2, 0.9);
  const MetricMeasureSpace space(base, {1.0, 1.0, 1.0});

  DistanceMatrix bad(3);  // zero off-diagonal entry: different positivity pattern and not a metric
  bad.set_symmetric(0, 1, 0.0);
  bad.set_symmetric(0, 2, 0.5);
  bad.set_symmetric(1, 2, 0.9);
  CHECK_THROWS(MonotoneDistanceFamily(space, {bad}));

  DistanceMatrix above(3);  // exceeds the limit: monotonicity violation
  above.set_symmetric(0, 1, 0.6);
  above.set_symmetric(0, 2, 0.5);
  above.set_symmetric(1, 2, 0.9);
  CHECK_THROWS_AS(MonotoneDistanceFamily(space, {above}), InvariantError);
}

TEST_CASE("generated matrices all validate across random snowflake families") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(12, rng);
    const MetricMeasureSpace base(d, oracles::random_measure(12, rng));
    const MonotoneDistanceFamily family = make_snowflake_family(base, {0.875, 0.75, 0.5});
    for (std::size_t k = 0; k < family.level_count(); ++k) {
      CHECK(validate_metric(family.level(k)).ok());
    }
  }
}
