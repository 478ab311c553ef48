#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "moscolab/distance_matrix.hpp"

namespace moscolab {

enum class BallKind { Open, Closed };

const char* to_string(BallKind kind);
BallKind ball_kind_from_string(const std::string& name);

/// Relative factor for the triangle-inequality tolerance:
/// TRI_TOL = kTriangleTolFactor * max entry of the matrix.
inline constexpr double kTriangleTolFactor = 1e-9;

struct MetricViolation {
  enum class Kind {
    Asymmetry,
    NonzeroDiagonal,
    NonpositiveOffdiag,
    Triangle,
  };
  Kind kind;
  std::size_t i = 0, j = 0, k = 0;  // k used by triangle violations only
  double value = 0.0;               // offending value
  double bound = 0.0;               // what it should have satisfied

  std::string describe() const;
};

struct MetricValidation {
  std::vector<MetricViolation> violations;
  bool ok() const { return violations.empty(); }
  /// Worst triangle violation (largest excess), if any.
  const MetricViolation* worst_triangle() const;
};

/// Checks every distance axiom on raw row data and lists all violations.
/// Throws MalformedInputError when the matrix is not square or has
/// non-finite entries.
MetricValidation validate_metric(const std::vector<std::vector<double>>& rows);

/// Same checks on a canonically symmetric matrix (asymmetry cannot occur).
MetricValidation validate_metric(const DistanceMatrix& dist);

/// A finite metric measure space: points (labels, optional coordinates),
/// a validated distance matrix and nonnegative measure weights with
/// positive total mass.
class MetricMeasureSpace {
public:
  MetricMeasureSpace(std::vector<std::vector<double>> dist_rows,
                     std::vector<double> measure,
                     std::vector<std::string> labels = {},
                     std::vector<std::vector<double>> coords = {});

  MetricMeasureSpace(DistanceMatrix dist, std::vector<double> measure,
                     std::vector<std::string> labels = {},
                     std::vector<std::vector<double>> coords = {});

  std::size_t size() const { return dist_.size(); }
  const DistanceMatrix& dist() const { return dist_; }
  double dist(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const std::vector<double>& measure() const { return measure_; }
  double total_mass() const { return total_mass_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::vector<double>>& coords() const { return coords_; }

  double max_distance() const { return dist_.max_entry(); }
  double min_positive_distance() const { return dist_.min_positive_entry(); }

  /// Same point set and measure under a different (validated) metric.
  MetricMeasureSpace with_distance(DistanceMatrix dist) const;

private:
  void check_measure() const;

  DistanceMatrix dist_;
  std::vector<double> measure_;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> coords_;
  double total_mass_ = 0.0;
};

struct Ball {
  std::size_t center = 0;
  double radius = 0.0;
  BallKind kind = BallKind::Open;
  std::vector<std::size_t> members;  // ascending point index
};

/// Membership is exact: d(center,y) < r (open) or <= r (closed).
Ball ball(const MetricMeasureSpace& space, std::size_t center, double radius, BallKind kind);
std::vector<std::size_t> ball_members(const DistanceMatrix& d, std::size_t center,
                                      double radius, BallKind kind);

/// d^alpha entrywise for alpha in (0,1]; requires d <= 1 so the transform
/// stays a metric and dominates d. alpha == 1 returns d bitwise.
DistanceMatrix snowflake_transform(const DistanceMatrix& d, double alpha);

/// Working scale for discrete slopes: 2x the median nearest-neighbour distance.
double default_slope_scale(const DistanceMatrix& d);

}  // namespace moscolab
