#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moscolab/distance_matrix.hpp"
#include "moscolab/family.hpp"
#include "moscolab/lipschitz.hpp"
#include "moscolab/metric_space.hpp"
#include "moscolab/scalar_field.hpp"

namespace moscolab {

enum class EnergyBackend { Slope, GraphDirichlet };

const char* to_string(EnergyBackend backend);
EnergyBackend energy_backend_from_string(const std::string& name);

struct EnergyConfig {
  double p = 2.0;                          // exponent in (1, inf)
  double scale = 1.0;                      // slope working scale r > 0
  BallKind kind = BallKind::Open;
  EnergyBackend backend = EnergyBackend::Slope;

  void validate() const;
};

struct EnergyReport {
  double value = 0.0;
  std::vector<double> density;   // per-point integrand, value = (1/p) sum density * m
  EnergyConfig config;
  bool envelope_trivial = false; // set by cheeger_energy
};

/// (1/p) sum_x density(x) m(x). Slope backend: density = slope_r(f)^p.
/// Graph-Dirichlet backend: density = (sum_{y in B_r(x)\{x}} w(x,y)(f(x)-f(y))^2)^{p/2}
/// with w(x,y) = 1 / (|B_r(x)\{x}| d(x,y)^2); quadratic in f at p = 2.
EnergyReport asymptotic_energy(const ScalarField& f, const DistanceMatrix& d,
                               const std::vector<double>& measure, const EnergyConfig& config);
EnergyReport asymptotic_energy(const ScalarField& f, const MetricMeasureSpace& space,
                               const EnergyConfig& config);

/// On a finite space the fixed-scale energy is continuous in f, so it equals
/// its own lower-semicontinuous envelope; this returns asymptotic_energy and
/// marks the report envelope_trivial.
EnergyReport cheeger_energy(const ScalarField& f, const DistanceMatrix& d,
                            const std::vector<double>& measure, const EnergyConfig& config);
EnergyReport cheeger_energy(const ScalarField& f, const MetricMeasureSpace& space,
                            const EnergyConfig& config);

/// (||f||_Lp^p + p * cheeger_energy(f))^(1/p).
double sobolev_norm(const ScalarField& f, const DistanceMatrix& d,
                    const std::vector<double>& measure, const EnergyConfig& config);
double sobolev_norm(const ScalarField& f, const MetricMeasureSpace& space,
                    const EnergyConfig& config);

struct EnergyComparison {
  double energy_d = 0.0;       // under the smaller distance
  double energy_dprime = 0.0;  // under the larger distance
  double margin = 0.0;         // energy_d - energy_dprime, >= 0 up to rounding
};

/// Requires d <= d' entrywise; asserts E^{d'}(f) <= E^{d}(f) up to 1e-12
/// relative and returns both values with the margin.
EnergyComparison energy_comparison_check(const ScalarField& f, const DistanceMatrix& d,
                                         const DistanceMatrix& dprime,
                                         const std::vector<double>& measure,
                                         const EnergyConfig& config);

struct ParallelogramDefect {
  double defect = 0.0;     // E(f+g) + E(f-g) - 2E(f) - 2E(g)
  double relative = 0.0;   // |defect| / max(E(f)+E(g), 1e-300)
  double energy_f = 0.0;
  double energy_g = 0.0;
};

/// p must equal 2.
ParallelogramDefect parallelogram_defect(const ScalarField& f, const ScalarField& g,
                                         const DistanceMatrix& d,
                                         const std::vector<double>& measure,
                                         const EnergyConfig& config);

struct HilbertianityScan {
  double max_relative_defect = 0.0;
  std::size_t argmax_trial = 0;
  bool hilbertian = false;  // max relative defect <= 1e-6
  std::size_t trials = 0;
};

/// Random field pairs (values uniform in [-1,1], mt19937_64 seeded), worst
/// relative parallelogram defect. Deterministic under a fixed seed.
HilbertianityScan hilbertianity_scan(const DistanceMatrix& d, const std::vector<double>& measure,
                                     const EnergyConfig& config, std::size_t trials,
                                     std::uint64_t seed);
HilbertianityScan hilbertianity_scan(const MetricMeasureSpace& space, const EnergyConfig& config,
                                     std::size_t trials, std::uint64_t seed);

}  // namespace moscolab
