#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "moscolab/approximation.hpp"
#include "moscolab/energy.hpp"
#include "moscolab/family.hpp"
#include "moscolab/scalar_field.hpp"

namespace moscolab {

/// A finite sequence of fields converging (strongly; the point set is finite)
/// to a limit field on the same points.
struct FunctionSequence {
  std::vector<ScalarField> terms;
  ScalarField limit;
};

struct LiminfReport {
  std::vector<double> energy_level;     // E^{d_i}_r(f_i), slope backend
  std::vector<double> energy_limit_fi;  // E^{d_inf}_r(f_i)
  std::vector<double> lp_gaps;          // integral |f_i - f|^p dm per index
  double energy_limit_f = 0.0;          // E^{d_inf}_r(f)
  double liminf_margin = 0.0;           // min_i E^{d_i}(f_i) - E^{d_inf}(f)
  double kappa = 0.0;                   // continuity modulus from max_i ||f_i - f||_inf
  bool kernel_ok = true;                // E^{d_i}(f_i) >= E^{d_inf}(f_i) per level
  bool liminf_ok = true;                // liminf_margin >= -kappa
};

/// Verifies the exact discrete chain E^{d_i}(f_i) >= E^{d_inf}(f_i) and the
/// liminf inequality up to a computed (not guessed) continuity modulus kappa.
LiminfReport gamma_liminf_check(const MonotoneDistanceFamily& family,
                                const FunctionSequence& sequence, const EnergyConfig& config);

struct RecoveryBlock {
  std::size_t n = 0;           // schedule position, eps = 1/n
  std::size_t level = 0;       // iota(n)
  double eps = 0.0;
  double lp_gap = 0.0;         // integral |g_n - f|^p dm
  double energy = 0.0;         // E^{d_iota(n)}_r(g_n)
  double slope_integral = 0.0; // p * energy, integral units
  ApproxReport report;
};

struct RecoverySequence {
  std::vector<RecoveryBlock> blocks;
  std::vector<std::size_t> assembled_block;  // per level >= iota(1): index into blocks
  std::size_t first_level = 0;               // iota(1)
  bool truncated = false;                    // schedule stopped early: levels ran out
};

struct LimsupReport {
  std::vector<double> energy_per_level;     // E^{d_i}_r(f_i) for assembled levels
  std::vector<double> block_bound_per_level; // E^{d_iota(n)}_r(g_n) for the block
  double energy_limit_f = 0.0;
  double limsup_margin = 0.0;     // E^{d_inf}(f) - max over the final block
  double schedule_tail = 0.0;     // 1/n_last
  double deviation = 0.0;         // measured slack beyond the schedule tail, integral units / p
  bool chain_ok = true;           // per-level E^{d_i}(f_i) <= block bound, exact
  bool limsup_ok = true;          // -margin <= schedule_tail + deviation
};

/// Builds the recovery sequence by calling the slope-control pipeline at
/// eps = 1/n while forcing the level scan strictly above the previous block.
/// Runs out of levels -> truncated flag, never an error.
std::pair<RecoverySequence, LimsupReport> recovery_sequence(const ScalarField& f,
                                                            const MonotoneDistanceFamily& family,
                                                            const EnergyConfig& config,
                                                            std::size_t schedule_len);

struct HilbertianityStability {
  std::vector<HilbertianityScan> per_level;
  HilbertianityScan limit;
  bool all_hilbertian = false;
};

/// Runs the parallelogram scan at every level and at the limit with the same
/// seed. Quadraticity of the graph-Dirichlet backend is structural, so every
/// level passing demonstrates the stability pattern.
HilbertianityStability hilbertianity_stability_experiment(const MonotoneDistanceFamily& family,
                                                          const EnergyConfig& config,
                                                          std::size_t trials, std::uint64_t seed);

struct SnowflakeRow {
  std::size_t level = 0;   // exponent index i >= 2, alpha = 1 - 1/i
  double radius = 0.0;
  double energy = 0.0;     // E^{d_i}_r(f)
  double bound = 0.0;      // Lip_d(f) * r^{1/(i-1)}, pointwise slope bound
  double margin = 0.0;     // bound - max slope, >= 0
};

struct SnowflakeFit {
  std::size_t level = 0;
  double fitted_exponent = 0.0;   // log-log slope of energy vs radius
  double predicted_exponent = 0.0; // p / (i - 1)
  std::size_t points_used = 0;     // rows with positive energy
};

struct SnowflakeTable {
  std::vector<SnowflakeRow> rows;
  std::vector<SnowflakeFit> fits;
  std::vector<double> base_energy;  // E^{d}_r(f) at the same radii
  std::vector<double> radii;
  double lip_f = 0.0;               // Lip_d(f) under the base distance
  bool pointwise_ok = true;         // slope bound held at every (i, r, x)
};

/// Energies of the snowflake distances d^{1-1/i} over a radius grid spanning
/// at least a decade, their pointwise slope bound, and per-level log-log fits
/// against the exponent p/(i-1).
SnowflakeTable snowflake_counterexample(const MetricMeasureSpace& base, const ScalarField& f,
                                        double p, std::span<const double> radii,
                                        std::span<const std::size_t> levels, BallKind kind);

}  // namespace moscolab
