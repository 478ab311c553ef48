#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "moscolab/approximation.hpp"
#include "moscolab/energy.hpp"
#include "moscolab/errors.hpp"
#include "moscolab/family.hpp"
#include "moscolab/lipschitz.hpp"
#include "moscolab/metric_space.hpp"

#include "oracles.hpp"

using namespace moscolab;

namespace {

MetricMeasureSpace line_space(std::size_t n, double step = 1.0) {
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.set_symmetric(i, j, (static_cast<double>(j) - static_cast<double>(i)) * step);
    }
  }
  return MetricMeasureSpace(d, std::vector<double>(n, 1.0));
}

ScalarField distance_field(const MetricMeasureSpace& space, std::size_t anchor,
                           double clamp = 0.0) {
  std::vector<double> v(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    v[x] = space.dist(anchor, x);
    if (clamp > 0.0) v[x] = std::min(v[x], clamp);
  }
  return ScalarField(std::move(v));
}

}  // namespace

TEST_CASE("egorov selection: constant fields keep the whole ambient set") {
  const MetricMeasureSpace space = line_space(5);
  const ScalarField f(std::vector<double>(5, 2.0));
  const auto sel = egorov_select(f, space, oracles::all_points(5), 0.1, 1.5, BallKind::Open);
  CHECK(sel.good_set == oracles::all_points(5));
  CHECK(sel.bad_mass == 0.0);
  CHECK(sel.radius == 1.5);  // largest grid radius already works
}

TEST_CASE("egorov selection on the uniform 5-point line with f = d(.,0)") {
  const MetricMeasureSpace space = line_space(5);
  const ScalarField f = distance_field(space, 0);
  // Local constants are 1 at every radius, matching the reference slope.
  const auto sel = egorov_select(f, space, oracles::all_points(5), 0.1, 1.5, BallKind::Open);
  CHECK(sel.good_set == oracles::all_points(5));
  CHECK(sel.bad_mass <= 0.1);
}

TEST_CASE("egorov selection matches a direct radius-scan oracle") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    // Mass concentrated on point 0, light elsewhere.
    std::vector<double> m(10, 0.001);
    m[0] = 1.0;
    const MetricMeasureSpace space(d, m);
    const ScalarField f(oracles::random_values(10, rng));
    const double eps_prime = 0.2;
    const double r0 = 0.5;
    const auto sel = egorov_select(f, space, oracles::all_points(10), eps_prime, r0, BallKind::Open);

    // Oracle: first radius in the halving grid whose bad mass fits.
    const SlopeField ref = slope_field(f, d, r0, BallKind::Open);
    double radius = r0;
    while (true) {
      std::vector<std::size_t> good;
      double bad = 0.0;
      for (std::size_t x = 0; x < 10; ++x) {
        const auto local = ball_members(d, x, 4.0 * radius, BallKind::Open);
        if (oracles::lip_bruteforce(f, local, d) <= ref.values[x] + eps_prime) {
          good.push_back(x);
        } else {
          bad += m[x];
        }
      }
      if (bad <= eps_prime) {
        CHECK(sel.radius == radius);
        CHECK(sel.good_set == good);
        // Selection can only succeed with the heavy point inside K.
        CHECK(std::find(good.begin(), good.end(), std::size_t{0}) != good.end());
        break;
      }
      radius *= 0.5;
    }
  }
}

TEST_CASE("egorov selection rejects out-of-range eps_prime") {
  const MetricMeasureSpace space = line_space(3);
  const ScalarField f = distance_field(space, 0);
  CHECK_THROWS_AS(egorov_select(f, space, oracles::all_points(3), 0.3, 1.0, BallKind::Open),
                  ParameterError);
  CHECK_THROWS_AS(egorov_select(f, space, oracles::all_points(3), 0.0, 1.0, BallKind::Open),
                  ParameterError);
}

TEST_CASE("partition of unity: singleton, disjoint halves, line sums") {
  SUBCASE("singleton K") {
    const MetricMeasureSpace space = line_space(4);
    const auto pou = build_partition(std::vector<std::size_t>{2}, 1.0, space.dist(), space.dist());
    REQUIRE(pou.anchors == std::vector<std::size_t>{2});
    CHECK(pou.weights[0][2] == 1.0);
  }
  SUBCASE("two anchors covering disjoint halves have 0/1 weights") {
    DistanceMatrix d(4);
    d.set_symmetric(0, 1, 0.2);
    d.set_symmetric(2, 3, 0.2);
    d.set_symmetric(0, 2, 3.0);
    d.set_symmetric(0, 3, 3.1);
    d.set_symmetric(1, 2, 3.1);
    d.set_symmetric(1, 3, 3.0);
    const auto pou = build_partition(oracles::all_points(4), 1.0, d, d);
    REQUIRE(pou.anchors.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t x = 0; x < 4; ++x) {
        const double w = pou.weights[j][x];
        CHECK((w == 0.0 || w == 1.0));
      }
    }
  }
  SUBCASE("5-point line at r = 1.5: weights sum to 1 within 1e-12") {
    const MetricMeasureSpace space = line_space(5);
    const auto pou = build_partition(oracles::all_points(5), 1.5, space.dist(), space.dist());
    for (std::size_t x = 0; x < 5; ++x) {
      double total = 0.0;
      for (const auto& w : pou.weights) total += w[x];
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
  SUBCASE("supports stay inside K and the cover balls") {
    std::mt19937_64 rng(73);
    const DistanceMatrix d = oracles::random_cloud_metric(12, rng);
    std::vector<std::size_t> K{0, 1, 2, 4, 6, 8, 10};
    const DistanceMatrix d1 = snowflake_transform(d, 0.8);  // any smaller metric
    const auto pou = build_partition(K, 0.4, d, d1);
    for (std::size_t j = 0; j < pou.anchors.size(); ++j) {
      for (std::size_t x = 0; x < 12; ++x) {
        if (pou.weights[j][x] != 0.0) {
          CHECK(std::find(K.begin(), K.end(), x) != K.end());
          CHECK(d(x, pou.anchors[j]) < 0.4);
        }
      }
    }
  }
  SUBCASE("greedy anchors are deterministic") {
    std::mt19937_64 rng(79);
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    const auto a = build_partition(oracles::all_points(10), 0.3, d, d);
    const auto b = build_partition(oracles::all_points(10), 0.3, d, d);
    CHECK(a.anchors == b.anchors);
    CHECK(a.anchors.front() == 0);  // lowest-index start
  }
}

TEST_CASE("patch with a single anchor reduces to the cone approximant") {
  std::mt19937_64 rng(83);
  const DistanceMatrix d = oracles::random_cloud_metric(6, rng, 0.5);  // diameter 1/2
  const MetricMeasureSpace base(d, std::vector<double>(6, 1.0 / 6.0));
  const MonotoneDistanceFamily family = make_snowflake_family(base, {0.9, 0.5});
  const ScalarField f(oracles::random_values(6, rng));
  // One bump covers everything at r = 1 > diameter.
  const auto pou = build_partition(oracles::all_points(6), 1.0, family.limit(), family.level(0));
  REQUIRE(pou.anchors.size() == 1);
  const double eps_prime = 0.05;
  const auto patched = patch(f, pou, family, eps_prime, 1.0);
  // psi_1 == 1, so h_tilde = h_1 and the Lemma conclusions carry over.
  CHECK(patched.gap_on_K <= eps_prime * (1.0 + 1e-9));
  const double L = lip_constant(f, family.limit());
  CHECK(patched.lip_on_K <= L * (1.0 + 1e-9) + 1e-15);
}

TEST_CASE("patch keeps constants within eps_prime") {
  const MetricMeasureSpace space = line_space(5, 0.2);
  const MonotoneDistanceFamily family =
      make_snowflake_family(MetricMeasureSpace(space.dist(), space.measure()), {0.9, 0.5});
  const ScalarField f(std::vector<double>(5, 1.0));
  const auto pou = build_partition(oracles::all_points(5), 0.5, family.limit(), family.level(0));
  const auto patched = patch(f, pou, family, 0.1, 0.5);
  CHECK(patched.gap_on_K <= 0.1 * (1.0 + 1e-9));
  CHECK(patched.lip_on_K <= (5.0 * 0.0 + 0.1) * (1.0 + 1e-9));
}

TEST_CASE("patch obeys the 5L + eps' bound on snowflake scenarios (pair enumeration)") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 5; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    const MetricMeasureSpace base(d, std::vector<double>(10, 0.1));
    const MonotoneDistanceFamily family = make_snowflake_family(base, {0.9, 0.75, 0.6, 0.5});
    const ScalarField f = [&] {
      std::vector<double> v(10);
      for (std::size_t x = 0; x < 10; ++x) v[x] = family.limit()(x, 0);
      return ScalarField(v);
    }();
    const double eps_prime = 0.05;
    const auto sel =
        egorov_select(f, family.base(), oracles::all_points(10), eps_prime, 0.5, BallKind::Open);
    const auto pou = build_partition(sel.good_set, sel.radius, family.limit(), family.level(0));
    const auto patched = patch(f, pou, family, eps_prime, sel.radius);

    const double L = oracles::lip_bruteforce(f, oracles::all_points(10), family.limit());
    const double measured =
        oracles::lip_bruteforce(patched.h_tilde, sel.good_set, family.level(patched.level));
    CHECK(measured <= (5.0 * L + eps_prime) * (1.0 + 1e-9));
    CHECK(patched.lip_bound_ok);
  }
}

TEST_CASE("slope-controlled extension") {
  std::mt19937_64 rng(97);
  SUBCASE("K = X extends to the identity") {
    const DistanceMatrix d = oracles::random_cloud_metric(8, rng);
    const ScalarField h(oracles::random_values(8, rng));
    const ScalarField ext = extend_slope_controlled(h, oracles::all_points(8), d, 0.01);
    for (std::size_t x = 0; x < 8; ++x) CHECK(ext[x] == h[x]);
  }
  SUBCASE("singleton K is a single cone") {
    const DistanceMatrix d = oracles::random_cloud_metric(6, rng);
    std::vector<double> hv(6, 0.0);
    hv[2] = 1.5;
    const ScalarField h(hv, std::vector<std::size_t>{2});
    double c_prime = 0.0;
    const ScalarField ext =
        extend_slope_controlled(h, std::vector<std::size_t>{2}, d, 0.25, &c_prime);
    CHECK(c_prime == 0.25);  // Lip over a singleton is 0
    for (std::size_t x = 0; x < 6; ++x) {
      CHECK(ext[x] == doctest::Approx(1.5 + 0.25 * d(x, 2)).epsilon(1e-15));
    }
  }
  SUBCASE("extension dominates any globally Lipschitz function it restricts") {
    for (int trial = 0; trial < 10; ++trial) {
      const DistanceMatrix d = oracles::random_cloud_metric(12, rng);
      const ScalarField F(oracles::random_values(12, rng));
      std::vector<std::size_t> K{0, 2, 3, 5, 7, 9, 11};
      std::vector<double> hv(12, 0.0);
      for (std::size_t x : K) hv[x] = F[x];
      const ScalarField h_tilde(hv, K);
      double c_prime = 0.0;
      const ScalarField h = extend_slope_controlled(h_tilde, K, d, 1e-9, &c_prime);
      // The K-restricted constant can only underestimate the global one, so
      // compare against functions whose constant is attained on K.
      const double lip_K = oracles::lip_bruteforce(F, K, d);
      const double lip_X = oracles::lip_bruteforce(F, oracles::all_points(12), d);
      for (std::size_t x : K) CHECK(h[x] == F[x]);
      if (lip_K >= lip_X) {
        for (std::size_t x = 0; x < 12; ++x) CHECK(h[x] >= F[x] - 1e-12);
      }
      CHECK(oracles::lip_bruteforce(h, oracles::all_points(12), d) <= c_prime * (1.0 + 1e-12));
    }
  }
  SUBCASE("empty K is rejected") {
    const DistanceMatrix d = oracles::random_cloud_metric(4, rng);
    CHECK_THROWS_AS(extend_slope_controlled(ScalarField::zeros(4), std::vector<std::size_t>{}, d, 0.1),
                    ParameterError);
  }
}

TEST_CASE("cutoff: hand-evaluated eta and the product rule") {
  const MetricMeasureSpace space = line_space(4, 0.75);  // distances from 0: 0, .75, 1.5, 2.25
  std::vector<double> fv(4, 0.0);
  fv[0] = 1.0;
  const ScalarField f(fv, std::vector<std::size_t>{0});
  const ScalarField h(std::vector<double>{1.0, 0.9, 0.8, 0.7});

  const auto [g, cut] = apply_cutoff(h, f, oracles::all_points(4), space.dist());
  CHECK(cut.eta[0] == 1.0);
  CHECK(cut.eta[1] == 1.0);
  CHECK(cut.eta[2] == 0.5);
  CHECK(cut.eta[3] == 0.0);
  CHECK(g[0] == h[0]);
  CHECK(g[1] == h[1]);
  CHECK(g[2] == doctest::Approx(0.4));
  CHECK(g[3] == 0.0);
  CHECK(cut.core == std::vector<std::size_t>{0, 1});
  CHECK(cut.halo == std::vector<std::size_t>{0, 1, 2});
  // eta is 1-Lipschitz
  CHECK(lip_constant(cut.eta, space.dist()) <= 1.0 + 1e-12);
}

TEST_CASE("cutoff with empty support intersection returns zero with a flag") {
  const MetricMeasureSpace space = line_space(4);
  const ScalarField f = ScalarField::zeros(4);
  const ScalarField h(std::vector<double>{1.0, 1.0, 1.0, 1.0});
  const auto [g, cut] = apply_cutoff(h, f, oracles::all_points(4), space.dist());
  CHECK(cut.empty_core);
  for (std::size_t x = 0; x < 4; ++x) CHECK(g[x] == 0.0);
}

TEST_CASE("approx_with_slope_control: trivial paths") {
  std::mt19937_64 rng(101);
  const DistanceMatrix d = oracles::random_cloud_metric(8, rng);
  const MetricMeasureSpace base(d, std::vector<double>(8, 0.125));

  SUBCASE("zero field takes the flagged trivial path") {
    const MonotoneDistanceFamily family = make_snowflake_family(base, {0.9, 0.5});
    const auto result =
        approx_with_slope_control(ScalarField::zeros(8), 0.1, family, 2.0, 0.4);
    CHECK(result.report.trivial_path);
    CHECK(result.report.success);
    for (std::size_t x = 0; x < 8; ++x) CHECK(result.g[x] == 0.0);
  }
  SUBCASE("family at the limit: no distance gap to bridge") {
    const MonotoneDistanceFamily family(base, {d, d});
    const ScalarField f = [&] {
      std::vector<double> v(8);
      for (std::size_t x = 0; x < 8; ++x) v[x] = std::min(d(x, 0), 0.6);
      return ScalarField(v);
    }();
    const auto result = approx_with_slope_control(f, 0.05, family, 2.0, 0.4);
    CHECK(result.report.success);
    CHECK(result.report.lp_gap <= 0.05);
  }
}

TEST_CASE("approx_with_slope_control meets both integral conclusions on snowflake scenarios") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 6; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(20, rng);
    const MetricMeasureSpace base(d, std::vector<double>(20, 0.05));
    const MonotoneDistanceFamily family =
        make_snowflake_family(base, {0.9, 0.8, 0.7, 0.6, 0.55, 0.5});
    const ScalarField f = [&] {
      std::vector<double> v(20);
      for (std::size_t x = 0; x < 20; ++x) v[x] = std::min(family.limit()(x, 0), 0.7);
      return ScalarField(v);
    }();
    const double p = (trial % 3 == 0) ? 1.5 : (trial % 3 == 1 ? 2.0 : 3.0);
    const double eps = 0.05;
    const auto result = approx_with_slope_control(f, eps, family, p, 0.3);
    CHECK(result.report.success);
    CHECK(result.report.lp_gap <= eps);
    CHECK(result.report.slope_integral_g <= result.report.slope_integral_f + eps);

    // Cross-check the L^p gap by direct summation.
    double direct = 0.0;
    for (std::size_t x = 0; x < 20; ++x) {
      direct += std::pow(std::abs(result.g[x] - f[x]), p) * base.measure()[x];
    }
    CHECK(result.report.lp_gap == doctest::Approx(direct).epsilon(1e-12));
  }
}
