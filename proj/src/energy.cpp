#include "moscolab/energy.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "moscolab/errors.hpp"

namespace moscolab {

namespace {
constexpr double kRelSlack = 1e-12;
constexpr double kDefectFloor = 1e-300;
constexpr double kHilbertTol = 1e-6;
}  // namespace

const char* to_string(EnergyBackend backend) {
  return backend == EnergyBackend::Slope ? "slope" : "graph-dirichlet";
}

EnergyBackend energy_backend_from_string(const std::string& name) {
  if (name == "slope") return EnergyBackend::Slope;
  if (name == "graph-dirichlet") return EnergyBackend::GraphDirichlet;
  throw ParameterError("unknown energy backend '" + name + "' (expected slope|graph-dirichlet)");
}

void EnergyConfig::validate() const {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("energy exponent p must lie in (1, inf)");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("energy scale must be positive");
}

EnergyReport asymptotic_energy(const ScalarField& f, const DistanceMatrix& d,
                               const std::vector<double>& measure, const EnergyConfig& config) {
  config.validate();
  if (f.size() != d.size() || measure.size() != d.size()) {
    throw ParameterError("field, metric and measure must agree in size");
  }
  EnergyReport report;
  report.config = config;
  report.density.assign(d.size(), 0.0);
  if (config.backend == EnergyBackend::Slope) {
    const SlopeField slopes = slope_field(f, d, config.scale, config.kind);
    for (std::size_t x = 0; x < d.size(); ++x) {
      report.density[x] = std::pow(slopes.values[x], config.p);
    }
  } else {
    for (std::size_t x = 0; x < d.size(); ++x) {
      const std::vector<std::size_t> members = ball_members(d, x, config.scale, config.kind);
      std::size_t neighbor_count = 0;
      for (std::size_t y : members) {
        if (y != x) ++neighbor_count;
      }
      if (neighbor_count == 0) continue;
      double quad = 0.0;
      for (std::size_t y : members) {
        if (y == x) continue;
        const double dv = d(x, y);
        const double w = 1.0 / (static_cast<double>(neighbor_count) * dv * dv);
        const double diff = f[x] - f[y];
        quad += w * diff * diff;
      }
      report.density[x] = std::pow(quad, 0.5 * config.p);
    }
  }
  double total = 0.0;
  for (std::size_t x = 0; x < d.size(); ++x) total += report.density[x] * measure[x];
  report.value = total / config.p;
  return report;
}

EnergyReport asymptotic_energy(const ScalarField& f, const MetricMeasureSpace& space,
                               const EnergyConfig& config) {
  return asymptotic_energy(f, space.dist(), space.measure(), config);
}

EnergyReport cheeger_energy(const ScalarField& f, const DistanceMatrix& d,
                            const std::vector<double>& measure, const EnergyConfig& config) {
  EnergyReport report = asymptotic_energy(f, d, measure, config);
  report.envelope_trivial = true;
  return report;
}

EnergyReport cheeger_energy(const ScalarField& f, const MetricMeasureSpace& space,
                            const EnergyConfig& config) {
  return cheeger_energy(f, space.dist(), space.measure(), config);
}

double sobolev_norm(const ScalarField& f, const DistanceMatrix& d,
                    const std::vector<double>& measure, const EnergyConfig& config) {
  const EnergyReport energy = cheeger_energy(f, d, measure, config);
  const double lp = lp_integral(f, config.p, measure);
  return std::pow(lp + config.p * energy.value, 1.0 / config.p);
}

double sobolev_norm(const ScalarField& f, const MetricMeasureSpace& space,
                    const EnergyConfig& config) {
  return sobolev_norm(f, space.dist(), space.measure(), config);
}

EnergyComparison energy_comparison_check(const ScalarField& f, const DistanceMatrix& d,
                                         const DistanceMatrix& dprime,
                                         const std::vector<double>& measure,
                                         const EnergyConfig& config) {
  if (d.size() != dprime.size()) throw ParameterError("metrics have different sizes");
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      if (d(i, j) > dprime(i, j) * (1.0 + kRelSlack)) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "precondition d <= d' fails at (%zu,%zu): %.17g > %.17g", i, j, d(i, j),
                      dprime(i, j));
        throw ParameterError(buf);
      }
    }
  }
  EnergyComparison cmp;
  cmp.energy_d = asymptotic_energy(f, d, measure, config).value;
  cmp.energy_dprime = asymptotic_energy(f, dprime, measure, config).value;
  cmp.margin = cmp.energy_d - cmp.energy_dprime;
  if (cmp.energy_dprime > cmp.energy_d * (1.0 + kRelSlack)) {
    throw InvariantError("energy",
                         "energy comparison failed: E^{d'}(f) > E^{d}(f) despite d <= d'",
                         cmp.margin);
  }
  return cmp;
}

ParallelogramDefect parallelogram_defect(const ScalarField& f, const ScalarField& g,
                                         const DistanceMatrix& d,
                                         const std::vector<double>& measure,
                                         const EnergyConfig& config) {
  if (config.p != 2.0) throw ParameterError("parallelogram defect requires p = 2");
  ParallelogramDefect out;
  out.energy_f = asymptotic_energy(f, d, measure, config).value;
  out.energy_g = asymptotic_energy(g, d, measure, config).value;
  const double e_sum = asymptotic_energy(add(f, g), d, measure, config).value;
  const double e_diff = asymptotic_energy(sub(f, g), d, measure, config).value;
  out.defect = e_sum + e_diff - 2.0 * out.energy_f - 2.0 * out.energy_g;
  out.relative = std::abs(out.defect) / std::max(out.energy_f + out.energy_g, kDefectFloor);
  return out;
}

HilbertianityScan hilbertianity_scan(const DistanceMatrix& d, const std::vector<double>& measure,
                                     const EnergyConfig& config, std::size_t trials,
                                     std::uint64_t seed) {
  if (trials < 1) throw ParameterError("hilbertianity scan needs at least one trial");
  if (config.p != 2.0) throw ParameterError("hilbertianity scan requires p = 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  HilbertianityScan scan;
  scan.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> fv(d.size()), gv(d.size());
    for (double& v : fv) v = unit(rng);
    for (double& v : gv) v = unit(rng);
    const ParallelogramDefect defect =
        parallelogram_defect(ScalarField(std::move(fv)), ScalarField(std::move(gv)), d, measure,
                             config);
    if (defect.relative > scan.max_relative_defect) {
      scan.max_relative_defect = defect.relative;
      scan.argmax_trial = t;
    }
  }
  scan.hilbertian = scan.max_relative_defect <= kHilbertTol;
  return scan;
}

HilbertianityScan hilbertianity_scan(const MetricMeasureSpace& space, const EnergyConfig& config,
                                     std::size_t trials, std::uint64_t seed) {
  return hilbertianity_scan(space.dist(), space.measure(), config, trials, seed);
}

}  // namespace moscolab
