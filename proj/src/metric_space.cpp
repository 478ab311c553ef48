#include "moscolab/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "moscolab/errors.hpp"

namespace moscolab {

const char* to_string(BallKind kind) {
  return kind == BallKind::Open ? "open" : "closed";
}

BallKind ball_kind_from_string(const std::string& name) {
  if (name == "open") return BallKind::Open;
  if (name == "closed") return BallKind::Closed;
  throw ParameterError("unknown ball kind '" + name + "' (expected open|closed)");
}

std::string MetricViolation::describe() const {
  char buf[160];
  switch (kind) {
    case Kind::Asymmetry:
      std::snprintf(buf, sizeof(buf), "asymmetry at (%zu,%zu): |d_ij - d_ji| = %.17g", i, j, value);
      break;
    case Kind::NonzeroDiagonal:
      std::snprintf(buf, sizeof(buf), "nonzero diagonal at %zu: d_ii = %.17g", i, value);
      break;
    case Kind::NonpositiveOffdiag:
      std::snprintf(buf, sizeof(buf), "nonpositive off-diagonal at (%zu,%zu): d_ij = %.17g", i, j, value);
      break;
    case Kind::Triangle:
      std::snprintf(buf, sizeof(buf),
                    "triangle violation at (%zu,%zu,%zu): d_ik = %.17g > d_ij + d_jk = %.17g",
                    i, j, k, value, bound);
      break;
  }
  return std::string(buf);
}

const MetricViolation* MetricValidation::worst_triangle() const {
  const MetricViolation* worst = nullptr;
  double worst_excess = -1.0;
  for (const auto& v : violations) {
    if (v.kind != MetricViolation::Kind::Triangle) continue;
    const double excess = v.value - v.bound;
    if (excess > worst_excess) {
      worst_excess = excess;
      worst = &v;
    }
  }
  return worst;
}

namespace {

void check_shape(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  for (const auto& row : rows) {
    if (row.size() != n) {
      throw MalformedInputError("distance matrix is not square: " +
                                std::to_string(n) + " rows, a row of length " +
                                std::to_string(row.size()));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw MalformedInputError("distance matrix has a non-finite entry");
    }
  }
}

void collect_axioms(const DistanceMatrix& d, MetricValidation& out) {
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) {
      out.violations.push_back({MetricViolation::Kind::NonzeroDiagonal, i, i, 0, d(i, i), 0.0});
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(d(i, j) > 0.0)) {
        out.violations.push_back({MetricViolation::Kind::NonpositiveOffdiag, i, j, 0, d(i, j), 0.0});
      }
    }
  }
  const double tol = kTriangleTolFactor * d.max_entry();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double dik = d(i, k);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        const double path = d(i, j) + d(j, k);
        if (dik > path + tol) {
          out.violations.push_back({MetricViolation::Kind::Triangle, i, j, k, dik, path});
        }
      }
    }
  }
}

}  // namespace

MetricValidation validate_metric(const std::vector<std::vector<double>>& rows) {
  check_shape(rows);
  MetricValidation out;
  const std::size_t n = rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(rows[i][j] - rows[j][i]);
      if (gap != 0.0) {
        out.violations.push_back({MetricViolation::Kind::Asymmetry, i, j, 0, gap, 0.0});
      }
    }
  }
  // Axioms are checked on the canonical (upper-triangle) view so that the
  // verdict matches what a constructed space would see.
  collect_axioms(DistanceMatrix::from_validated_rows(rows), out);
  return out;
}

MetricValidation validate_metric(const DistanceMatrix& dist) {
  MetricValidation out;
  collect_axioms(dist, out);
  return out;
}

MetricMeasureSpace::MetricMeasureSpace(std::vector<std::vector<double>> dist_rows,
                                       std::vector<double> measure,
                                       std::vector<std::string> labels,
                                       std::vector<std::vector<double>> coords) {
  const MetricValidation verdict = validate_metric(dist_rows);
  if (!verdict.ok()) {
    throw DomainError("invalid metric: " + verdict.violations.front().describe() + " (" +
                      std::to_string(verdict.violations.size()) + " violation(s) total)");
  }
  dist_ = DistanceMatrix::from_validated_rows(dist_rows);
  measure_ = std::move(measure);
  labels_ = std::move(labels);
  coords_ = std::move(coords);
  check_measure();
}

MetricMeasureSpace::MetricMeasureSpace(DistanceMatrix dist, std::vector<double> measure,
                                       std::vector<std::string> labels,
                                       std::vector<std::vector<double>> coords)
    : dist_(std::move(dist)),
      measure_(std::move(measure)),
      labels_(std::move(labels)),
      coords_(std::move(coords)) {
  const MetricValidation verdict = validate_metric(dist_);
  if (!verdict.ok()) {
    throw DomainError("invalid metric: " + verdict.violations.front().describe() + " (" +
                      std::to_string(verdict.violations.size()) + " violation(s) total)");
  }
  check_measure();
}

void MetricMeasureSpace::check_measure() const {
  if (measure_.size() != dist_.size()) {
    throw ParameterError("measure length " + std::to_string(measure_.size()) +
                         " does not match point count " + std::to_string(dist_.size()));
  }
  double total = 0.0;
  for (double m : measure_) {
    if (!std::isfinite(m) || m < 0.0) throw ParameterError("measure weights must be finite and >= 0");
    total += m;
  }
  if (!(total > 0.0)) throw ParameterError("total mass must be positive");
  const_cast<MetricMeasureSpace*>(this)->total_mass_ = total;
  if (!labels_.empty() && labels_.size() != dist_.size()) {
    throw ParameterError("label count does not match point count");
  }
  if (!coords_.empty() && coords_.size() != dist_.size()) {
    throw ParameterError("coordinate count does not match point count");
  }
}

MetricMeasureSpace MetricMeasureSpace::with_distance(DistanceMatrix dist) const {
  return MetricMeasureSpace(std::move(dist), measure_, labels_, coords_);
}

std::vector<std::size_t> ball_members(const DistanceMatrix& d, std::size_t center,
                                      double radius, BallKind kind) {
  std::vector<std::size_t> members;
  for (std::size_t y = 0; y < d.size(); ++y) {
    const double v = d(center, y);
    const bool in = (kind == BallKind::Open) ? (v < radius) : (v <= radius);
    if (in) members.push_back(y);
  }
  return members;
}

Ball ball(const MetricMeasureSpace& space, std::size_t center, double radius, BallKind kind) {
  if (center >= space.size()) {
    throw LookupError("unknown point id " + std::to_string(center) + " (space has " +
                      std::to_string(space.size()) + " points)");
  }
  if (radius < 0.0 || !std::isfinite(radius)) throw ParameterError("ball radius must be >= 0 and finite");
  Ball b;
  b.center = center;
  b.radius = radius;
  b.kind = kind;
  b.members = ball_members(space.dist(), center, radius, kind);
  return b;
}

DistanceMatrix snowflake_transform(const DistanceMatrix& d, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ParameterError("snowflake exponent must lie in (0,1], got " + std::to_string(alpha));
  }
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d(i, j) > 1.0) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "snowflake requires d <= 1, but d(%zu,%zu) = %.17g", i, j, d(i, j));
        throw DomainError(buf);
      }
    }
  }
  if (alpha == 1.0) return d;
  DistanceMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.set_symmetric(i, j, std::pow(d(i, j), alpha));
    }
  }
  return out;
}

double default_slope_scale(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n < 2) return 1.0;
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = d.max_entry();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && d(i, j) < best) best = d(i, j);
    }
    nearest[i] = best;
  }
  std::sort(nearest.begin(), nearest.end());
  const double median = (n % 2 == 1) ? nearest[n / 2]
                                     : 0.5 * (nearest[n / 2 - 1] + nearest[n / 2]);
  return 2.0 * median;
}

}  // namespace moscolab
