#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "moscolab/energy.hpp"
#include "moscolab/errors.hpp"
#include "moscolab/family.hpp"
#include "moscolab/metric_space.hpp"

#include "oracles.hpp"

using namespace moscolab;

namespace {

EnergyConfig slope_config(double p, double scale, BallKind kind = BallKind::Open) {
  EnergyConfig cfg;
  cfg.p = p;
  cfg.scale = scale;
  cfg.kind = kind;
  cfg.backend = EnergyBackend::Slope;
  return cfg;
}

EnergyConfig dirichlet_config(double p, double scale) {
  EnergyConfig cfg = slope_config(p, scale);
  cfg.backend = EnergyBackend::GraphDirichlet;
  return cfg;
}

DistanceMatrix two_point() {
  DistanceMatrix d(2);
  d.set_symmetric(0, 1, 1.0);
  return d;
}

}  // namespace

TEST_CASE("asymptotic energy on the two-point space") {
  const DistanceMatrix d = two_point();
  const std::vector<double> m{1.0, 1.0};
  const ScalarField f(std::vector<double>{0.0, 1.0});

  CHECK(asymptotic_energy(f, d, m, slope_config(2.0, 2.0)).value == doctest::Approx(1.0));
  CHECK(asymptotic_energy(f, d, m, slope_config(3.0, 2.0)).value ==
        doctest::Approx(2.0 / 3.0));

  const ScalarField constant(std::vector<double>{4.0, 4.0});
  CHECK(asymptotic_energy(constant, d, m, slope_config(2.0, 2.0)).value == 0.0);
  CHECK(asymptotic_energy(constant, d, m, dirichlet_config(2.0, 2.0)).value == 0.0);
}

TEST_CASE("cheeger energy equals the asymptotic energy and is flagged trivial") {
  const DistanceMatrix d = two_point();
  const std::vector<double> m{1.0, 1.0};
  const ScalarField f(std::vector<double>{0.0, 1.0});
  const EnergyReport a = asymptotic_energy(f, d, m, slope_config(2.0, 2.0));
  const EnergyReport c = cheeger_energy(f, d, m, slope_config(2.0, 2.0));
  CHECK(c.value == a.value);
  CHECK(c.envelope_trivial);
  CHECK_FALSE(a.envelope_trivial);
}

TEST_CASE("sobolev norm formula") {
  const DistanceMatrix d = two_point();
  const std::vector<double> m{1.0, 1.0};

  CHECK(sobolev_norm(ScalarField::zeros(2), d, m, slope_config(2.0, 2.0)) == 0.0);
  // ||f||_2^2 = 1, p E = 2: sqrt(3)
  CHECK(sobolev_norm(ScalarField(std::vector<double>{0.0, 1.0}), d, m, slope_config(2.0, 2.0)) ==
        doctest::Approx(std::sqrt(3.0)));
  // constant: plain Lp norm
  const double mass = 2.0;
  CHECK(sobolev_norm(ScalarField(std::vector<double>{2.5, 2.5}), d, m, slope_config(2.0, 2.0)) ==
        doctest::Approx(2.5 * std::sqrt(mass)));
}

TEST_CASE("sobolev norm dominates the Lp norm") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    const auto m = oracles::random_measure(10, rng);
    const ScalarField f(oracles::random_values(10, rng));
    for (double p : {1.5, 2.0, 3.0}) {
      const double lp = std::pow(lp_integral(f, p, m), 1.0 / p);
      CHECK(sobolev_norm(f, d, m, slope_config(p, 0.5)) >= lp * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("energy comparison: equality, snowflake domination, constants") {
  std::mt19937_64 rng(53);
  const DistanceMatrix d = oracles::random_cloud_metric(15, rng);
  const auto m = oracles::random_measure(15, rng);
  const ScalarField f(oracles::random_values(15, rng));

  SUBCASE("d' = d gives margin 0") {
    const EnergyComparison cmp = energy_comparison_check(f, d, d, m, slope_config(2.0, 0.5));
    CHECK(cmp.margin == 0.0);
  }
  SUBCASE("snowflake d' >= d: energies decrease") {
    for (int trial = 0; trial < 15; ++trial) {
      const DistanceMatrix dd = oracles::random_cloud_metric(15, rng);
      const DistanceMatrix dp = snowflake_transform(dd, 0.5);
      const ScalarField g(oracles::random_values(15, rng));
      const EnergyComparison cmp = energy_comparison_check(g, dd, dp, m, slope_config(2.0, 0.5));
      CHECK(cmp.energy_dprime <= cmp.energy_d * (1.0 + 1e-12));
    }
  }
  SUBCASE("constant field: 0 <= 0") {
    const ScalarField c(std::vector<double>(15, 7.0));
    const DistanceMatrix dp = snowflake_transform(d, 0.7);
    const EnergyComparison cmp = energy_comparison_check(c, d, dp, m, slope_config(2.0, 0.5));
    CHECK(cmp.energy_d == 0.0);
    CHECK(cmp.energy_dprime == 0.0);
  }
  SUBCASE("violated precondition names the pair") {
    const DistanceMatrix dp = snowflake_transform(d, 0.5);
    CHECK_THROWS_AS(energy_comparison_check(f, dp, d, m, slope_config(2.0, 0.5)),
                    ParameterError);
  }
}

TEST_CASE("both backends are p-homogeneous and shift invariant") {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 10; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(8, rng);
    const auto m = oracles::random_measure(8, rng);
    const ScalarField f(oracles::random_values(8, rng));
    for (double p : {1.5, 2.0, 3.0}) {
      for (const auto& cfg : {slope_config(p, 0.6), dirichlet_config(p, 0.6)}) {
        const double base = asymptotic_energy(f, d, m, cfg).value;
        const double lambda = -2.5;
        const double scaled_e = asymptotic_energy(scaled(f, lambda), d, m, cfg).value;
        CHECK(scaled_e == doctest::Approx(std::pow(std::abs(lambda), p) * base).epsilon(1e-12));

        const ScalarField shifted = add(f, ScalarField(std::vector<double>(8, 3.75)));
        CHECK(asymptotic_energy(shifted, d, m, cfg).value == doctest::Approx(base).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("slope-backend energy is monotone under distance increase") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(10, rng);
    const MetricMeasureSpace base(d, oracles::random_measure(10, rng));
    const MonotoneDistanceFamily family = make_snowflake_family(base, {0.9, 0.6});
    const ScalarField f(oracles::random_values(10, rng));
    const EnergyConfig cfg = slope_config(2.0, 0.4);
    const double e_low = asymptotic_energy(f, family.level(0), base.measure(), cfg).value;
    const double e_high = asymptotic_energy(f, family.level(1), base.measure(), cfg).value;
    CHECK(e_high <= e_low * (1.0 + 1e-12));
  }
}

TEST_CASE("parallelogram defect: exact zero cases and a hand-computed instance") {
  const DistanceMatrix d = two_point();
  const std::vector<double> m{1.0, 1.0};
  const EnergyConfig cfg = slope_config(2.0, 2.0);
  const ScalarField f(std::vector<double>{0.0, 1.0});
  const ScalarField g(std::vector<double>{1.0, 0.0});

  SUBCASE("g = 0 gives defect 0 exactly") {
    const ParallelogramDefect defect = parallelogram_defect(f, ScalarField::zeros(2), d, m, cfg);
    CHECK(defect.defect == 0.0);
  }
  SUBCASE("g = f gives defect 0 by 2-homogeneity") {
    const ParallelogramDefect defect = parallelogram_defect(f, f, d, m, cfg);
    CHECK(defect.defect == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("crossing pair: E(f+g) = 0, E(f-g) = 4, 2E(f)+2E(g) = 4") {
    const ParallelogramDefect defect = parallelogram_defect(f, g, d, m, cfg);
    CHECK(defect.defect == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(defect.energy_f == doctest::Approx(1.0));
    CHECK(defect.energy_g == doctest::Approx(1.0));
  }
  SUBCASE("p != 2 is rejected") {
    CHECK_THROWS_AS(parallelogram_defect(f, g, d, m, slope_config(3.0, 2.0)), ParameterError);
  }
}

TEST_CASE("graph-dirichlet backend satisfies the parallelogram identity") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    const DistanceMatrix d = oracles::random_cloud_metric(12, rng);
    const auto m = oracles::random_measure(12, rng);
    const EnergyConfig cfg = dirichlet_config(2.0, 0.6);
    std::mt19937_64 pair_rng(100 + trial);
    for (int pair = 0; pair < 100; ++pair) {
      const ScalarField f(oracles::random_values(12, pair_rng));
      const ScalarField g(oracles::random_values(12, pair_rng));
      const ParallelogramDefect defect = parallelogram_defect(f, g, d, m, cfg);
      CHECK(defect.relative <= 1e-9);
    }
  }
}

TEST_CASE("hilbertianity scan: verdicts and determinism") {
  std::mt19937_64 rng(67);
  const DistanceMatrix d = oracles::random_cloud_metric(9, rng);
  const auto m = oracles::random_measure(9, rng);

  SUBCASE("graph-dirichlet backend is hilbertian at tolerance") {
    const HilbertianityScan scan = hilbertianity_scan(d, m, dirichlet_config(2.0, 0.5), 100, 7);
    CHECK(scan.hilbertian);
    CHECK(scan.max_relative_defect <= 1e-9);
  }
  SUBCASE("fixed seed reproduces the scan exactly") {
    const HilbertianityScan a = hilbertianity_scan(d, m, slope_config(2.0, 0.5), 50, 99);
    const HilbertianityScan b = hilbertianity_scan(d, m, slope_config(2.0, 0.5), 50, 99);
    CHECK(a.max_relative_defect == b.max_relative_defect);
    CHECK(a.argmax_trial == b.argmax_trial);
  }
  SUBCASE("single-point space: all defects zero") {
    const DistanceMatrix single(1);
    const HilbertianityScan scan =
        hilbertianity_scan(single, std::vector<double>{1.0}, slope_config(2.0, 0.5), 10, 3);
    CHECK(scan.max_relative_defect == 0.0);
  }
  SUBCASE("slope backend on a 3-point non-line metric shows a positive defect") {
    DistanceMatrix tri(3);
    tri.set_symmetric(0, 1, 1.0);
    tri.set_symmetric(0, 2, 1.0);
    tri.set_symmetric(1, 2, 1.5);
    const HilbertianityScan scan = hilbertianity_scan(tri, std::vector<double>{1.0, 1.0, 1.0},
                                                      slope_config(2.0, 2.0), 100, 5);
    CHECK(scan.max_relative_defect > 0.0);
  }
}
