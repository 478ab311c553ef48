#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "moscolab/distance_matrix.hpp"
#include "moscolab/metric_space.hpp"

namespace moscolab {

/// Relative slack allowed when checking generated families for monotonicity.
inline constexpr double kMonotoneRelSlack = 1e-12;

/// An ordered family of distance matrices d_1 <= d_2 <= ... <= d_inf on a
/// fixed point set. The base space carries the limit distance d_inf and the
/// measure. Construction validates each level, pointwise monotonicity and
/// equality of positivity patterns.
class MonotoneDistanceFamily {
public:
  MonotoneDistanceFamily(MetricMeasureSpace base, std::vector<DistanceMatrix> levels);

  const MetricMeasureSpace& base() const { return base_; }
  const DistanceMatrix& limit() const { return base_.dist(); }
  std::size_t level_count() const { return levels_.size(); }
  const DistanceMatrix& level(std::size_t i) const { return levels_[i]; }
  std::size_t point_count() const { return base_.size(); }

private:
  MetricMeasureSpace base_;
  std::vector<DistanceMatrix> levels_;
};

/// Builds the family d^alpha_1 <= d^alpha_2 <= ... from a base metric d <= 1
/// and a strictly decreasing exponent schedule. The limit defaults to the
/// last (smallest-exponent) level.
MonotoneDistanceFamily make_snowflake_family(const MetricMeasureSpace& base,
                                             std::vector<double> alphas_decreasing);

struct GridSpec {
  std::vector<std::size_t> dims;   // points per axis
  double step = 1.0;               // grid spacing
  bool diagonal_neighbors = false; // axis neighbours only by default
};

/// point coordinates (grid centred at the origin), then penalty value
/// -> row-major DxD symmetric positive-definite matrix.
using TensorAt = std::function<std::vector<double>(const std::vector<double>& point, double eps)>;

TensorAt identity_tensor();
/// dx^2 + dy^2 + eps^-2 (dz - (x dy - y dx)/2)^2; requires 3 axes.
TensorAt heisenberg_tensor();

std::vector<std::vector<double>> grid_points(const GridSpec& spec);

/// Distance matrix of the grid graph whose edge (p,q) weighs
/// ||q - p|| in the averaged tensor (g(p)+g(q))/2. Edge weights snap to a
/// 2^-32 dyadic grid so shortest-path sums are exact in double precision:
/// distances are then independent of relaxation order and thread schedule.
DistanceMatrix grid_shortest_path_metric(const GridSpec& spec, const TensorAt& tensor,
                                         double eps, int threads = 1);

/// One grid space at a fixed penalty (measure weight step^dim per point).
MetricMeasureSpace grid_space(const GridSpec& spec, const TensorAt& tensor, double eps,
                              int threads = 1);

/// Shortest-path metrics along a strictly decreasing penalty schedule.
/// Edge-weight monotonicity across the schedule is checked edge by edge; the
/// limit defaults to the smallest-penalty level unless one is supplied.
MonotoneDistanceFamily riemannian_grid_family(const GridSpec& spec, const TensorAt& tensor,
                                              const std::vector<double>& epsilons_decreasing,
                                              const DistanceMatrix* explicit_limit = nullptr,
                                              int threads = 1);

/// Per-level sup over the subset's pairs of |d_inf - d_i|; asserted
/// nonincreasing in the level index.
std::vector<double> uniform_convergence_gap(std::span<const DistanceMatrix> levels,
                                            const DistanceMatrix& limit,
                                            const std::vector<std::size_t>& subset);
std::vector<double> uniform_convergence_gap(const MonotoneDistanceFamily& family,
                                            const std::vector<std::size_t>& subset);

}  // namespace moscolab
