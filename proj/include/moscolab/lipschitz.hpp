#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "moscolab/distance_matrix.hpp"
#include "moscolab/family.hpp"
#include "moscolab/metric_space.hpp"
#include "moscolab/scalar_field.hpp"

namespace moscolab {

/// Lipschitz constant of f restricted to a point subset:
/// max over distinct pairs of |f(x)-f(y)| / d(x,y), 0 when |E| <= 1.
double lip_constant(const ScalarField& f, std::span<const std::size_t> subset,
                    const DistanceMatrix& d);
/// Whole-space Lipschitz constant.
double lip_constant(const ScalarField& f, const DistanceMatrix& d);

/// Nonnegative slope value per point at a fixed working scale.
struct SlopeField {
  double scale = 0.0;
  BallKind kind = BallKind::Open;
  std::vector<double> values;
};

/// values[x] = lip_constant(f, ball(x, r), d). The fixed scale r stands in
/// for the r -> 0 slope, which is identically zero on a finite set.
SlopeField slope_field(const ScalarField& f, const DistanceMatrix& d, double r,
                       BallKind kind, int threads = 1);

/// Slope of f seen through a subspace: the ball at x is intersected with the
/// subset, so the value only depends on f restricted to the subset.
double slope_at_within(const ScalarField& f, const DistanceMatrix& d, double r,
                       BallKind kind, std::size_t x, std::span<const std::size_t> subset);

struct SlopeMonotonicityReport {
  std::vector<SlopeField> per_level;
  SlopeField limit;
  bool ok = true;
  double worst_margin = 0.0;   // most negative slope_i - slope_{i+1} observed
  std::size_t worst_level = 0; // earlier level of the offending comparison
  std::size_t worst_point = 0;
};

/// Checks slope^{d_i}(f) >= slope^{d_{i+1}}(f) >= slope^{d_inf}(f) pointwise.
/// Larger distances shrink balls and enlarge denominators, so this holds
/// exactly; the report records the worst measured margin.
SlopeMonotonicityReport slope_monotonicity_check(const ScalarField& f,
                                                 const MonotoneDistanceFamily& family,
                                                 double r, BallKind kind);

/// max_j(-L d(x, x_j) + f(x_j)) - 1/n over the anchor list. A max of
/// L-Lipschitz cones, hence L-Lipschitz under d. Logs a warning when L is
/// below the Lipschitz constant of f on the anchors.
ScalarField cone_lower_approx(const ScalarField& f, std::span<const std::size_t> anchors,
                              double L, unsigned n, const DistanceMatrix& d);

struct ApproxLipReport {
  std::size_t level = 0;          // returned level index
  std::size_t level_unconstrained = 0;  // first feasible level ignoring min_level
  unsigned n = 0;                 // cone offset parameter, 1/n <= eps/2
  double max_gap_on_K = 0.0;      // measured max_K |g - f|
  double lip_g = 0.0;             // measured Lip_{d_level}(g)
  double lip_f_limit = 0.0;       // Lip_{d_inf}(f), the bound L
};

struct ApproxLipResult {
  std::size_t level = 0;
  ScalarField g;
  ApproxLipReport report;
};

/// Finds the smallest family level (>= min_level) whose cone approximant
/// satisfies max_K |g - f| <= eps and Lip_{d_level}(g) <= Lip_{d_inf}(f).
/// Anchors are all of K, L = Lip_{d_inf}(f), n = ceil(2/eps). Throws
/// ExhaustionError with the best level and gap when no level qualifies.
ApproxLipResult approx_lipschitz(const ScalarField& f, std::span<const std::size_t> K,
                                 double eps, const MonotoneDistanceFamily& family,
                                 std::size_t min_level = 0);

}  // namespace moscolab
