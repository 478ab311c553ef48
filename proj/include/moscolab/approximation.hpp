#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "moscolab/distance_matrix.hpp"
#include "moscolab/family.hpp"
#include "moscolab/metric_space.hpp"
#include "moscolab/scalar_field.hpp"

namespace moscolab {

/// Good set selected by a decreasing-radius scan: on K the local Lipschitz
/// constant of f over 4r-balls is within eps_prime of the reference slope,
/// and the excluded mass m(B \ K) is at most eps_prime.
struct EgorovSelection {
  std::vector<std::size_t> good_set;     // K, ascending
  std::vector<std::size_t> ambient_ball; // B, ascending
  double radius = 0.0;                   // selected r
  double eps_prime = 0.0;
  double bad_mass = 0.0;                 // m(B \ K)
};

/// Scans r in {r0 / 2^j} and keeps the largest grid radius whose bad mass is
/// within eps_prime. Terminates: once 4r drops below the least positive
/// distance every local constant vanishes and K = B.
EgorovSelection egorov_select(const ScalarField& f, const MetricMeasureSpace& space,
                              std::span<const std::size_t> ambient, double eps_prime,
                              double reference_scale, BallKind kind);

/// Normalised bump weights subordinate to the cover {K n B_r^d(x_j)}.
/// Bumps are shaped by the limit distance so their supports stay inside the
/// d-balls; the recorded Lipschitz bounds are measured under d_1 on K.
struct PartitionOfUnity {
  std::vector<std::size_t> anchors;
  double radius = 0.0;
  std::vector<std::size_t> domain;      // K
  std::vector<ScalarField> weights;     // psi_j, zero off K n B_r^d(x_j)
  std::vector<double> lip_bounds_d1;    // Lip_{d_1}(psi_j; K)
};

/// Anchors are chosen by farthest-point traversal of K (first anchor = lowest
/// index, ties by index) until the open d-balls of radius r cover K.
PartitionOfUnity build_partition(std::span<const std::size_t> K, double r,
                                 const DistanceMatrix& d_cover, const DistanceMatrix& d1);

struct PatchResult {
  std::size_t level = 0;              // i = max_j i(j)
  ScalarField h_tilde;                // patched approximant, supported on K
  double lip_on_K = 0.0;              // measured Lip_{d_i|K}(h_tilde)
  double lip_bound = 0.0;             // 5 Lip_d(f) + eps_prime
  bool lip_bound_ok = true;
  double gap_on_K = 0.0;              // measured max_K |h_tilde - f|
  std::size_t level_threshold = 0;    // i_0: first level uniformly close on K
  bool threshold_met = true;          // false when no level reaches the i_0 bound
  std::size_t level_unconstrained = 0;  // max_j of the unconstrained scan levels
  std::vector<std::size_t> anchor_levels;  // i(j), same order as anchors
};

/// Per-anchor local functions are realised as McShane envelopes of f over
/// 2r-balls; each is approximated through the family at tolerance
/// eps_prime / max(k Lip_{d_1}(psi_j), 1) with the level scan floored at the
/// uniformity threshold i_0. Throws (via approx_lipschitz) on exhaustion.
PatchResult patch(const ScalarField& f, const PartitionOfUnity& partition,
                  const MonotoneDistanceFamily& family, double eps_prime,
                  double egorov_radius, std::size_t min_level = 0);

/// McShane extension of h_tilde off K with constant
/// C' = Lip_{d_i|K}(h_tilde) + eps_prime. h equals h_tilde on K exactly and
/// Lip_{d_i}(h) <= C'. Slope preservation on K is not guaranteed by this
/// surrogate; the caller measures the deviation.
ScalarField extend_slope_controlled(const ScalarField& h_tilde, std::span<const std::size_t> K,
                                    const DistanceMatrix& d_i, double eps_prime,
                                    double* extension_constant = nullptr);

struct CutoffField {
  ScalarField eta;                 // values in [0,1], 1-Lipschitz under d_i
  std::vector<std::size_t> core;   // eta = 1 (distance <= 1 from spt f n K)
  std::vector<std::size_t> halo;   // G = {distance <= 2}, support of eta
  bool empty_core = false;         // spt f n K was empty; g is identically 0
};

/// eta(x) = ((2 - d_i(x, spt f n K)) ^ 1) v 0 and g = eta h. The product
/// rule Lip(g) <= Lip(h) + sup|h| is asserted on all of X by enumeration.
std::pair<ScalarField, CutoffField> apply_cutoff(const ScalarField& h, const ScalarField& f,
                                                 std::span<const std::size_t> K,
                                                 const DistanceMatrix& d_i);

struct ApproxStepDiagnostics {
  double egorov_radius = 0.0;
  double bad_mass = 0.0;
  std::size_t ambient_size = 0;
  std::size_t good_set_size = 0;
  std::size_t partition_size = 0;
  double extension_constant = 0.0;   // C'
  double slope_deviation = 0.0;      // max_K (slope(h) - slope of h_tilde within K)
  std::size_t level_threshold = 0;   // i_0
  bool threshold_met = true;
  std::size_t level_unconstrained = 0;
  double patch_lip_on_K = 0.0;
  double patch_lip_bound = 0.0;
  bool patch_bound_ok = true;
  double patch_gap_on_K = 0.0;
  bool cutoff_empty_core = false;
};

struct ApproxReport {
  std::size_t level = 0;
  double p = 0.0;
  double scale = 0.0;
  double eps_target = 0.0;
  double eps_prime_final = 0.0;
  double lp_gap = 0.0;             // integral |g - f|^p dm
  double slope_integral_f = 0.0;   // integral slope^d_r(f)^p dm
  double slope_integral_g = 0.0;   // integral slope^{d_i}_r(g)^p dm
  double energy_excess = 0.0;      // slope_integral_g - slope_integral_f
  double lip_f = 0.0;              // L = Lip_d(f)
  double constant_C = 0.0;         // 5L + 2 eps_prime
  unsigned retries = 0;
  bool lp_ok = false;
  bool slope_ok = false;
  bool success = false;
  bool trivial_path = false;       // f had empty support
  ApproxStepDiagnostics steps;
};

struct SlopeControlResult {
  std::size_t level = 0;
  ScalarField g;
  ApproxReport report;
};

inline constexpr unsigned kSlopeControlRetryBudget = 4;  // halvings of eps_prime

/// Runs the five-step pipeline. eps_prime starts from
/// [(3p L^{p-1} + 1) m(B) + (15L + sup|f| + 7)^p] eps_prime <= eps and is
/// halved on failure, up to kSlopeControlRetryBudget times; exhausting the
/// budget returns the best attempt flagged rather than throwing.
SlopeControlResult approx_with_slope_control(const ScalarField& f, double eps,
                                             const MonotoneDistanceFamily& family, double p,
                                             double slope_scale, BallKind kind = BallKind::Open,
                                             std::size_t min_level = 0);

}  // namespace moscolab
