#include "moscolab/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "moscolab/errors.hpp"
#include "moscolab/logging.hpp"
#include "moscolab/parallel.hpp"

namespace moscolab {

namespace {
constexpr double kRelSlack = 1e-12;

void check_indices(std::span<const std::size_t> subset, std::size_t n) {
  for (std::size_t x : subset) {
    if (x >= n) throw LookupError("point id " + std::to_string(x) + " out of range");
  }
}
}  // namespace

double lip_constant(const ScalarField& f, std::span<const std::size_t> subset,
                    const DistanceMatrix& d) {
  check_indices(subset, d.size());
  double best = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    const std::size_t x = subset[a];
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      const std::size_t y = subset[b];
      if (x == y) continue;
      const double ratio = std::abs(f[x] - f[y]) / d(x, y);
      if (ratio > best) best = ratio;
    }
  }
  return best;
}

double lip_constant(const ScalarField& f, const DistanceMatrix& d) {
  double best = 0.0;
  for (std::size_t x = 0; x < d.size(); ++x) {
    for (std::size_t y = x + 1; y < d.size(); ++y) {
      const double ratio = std::abs(f[x] - f[y]) / d(x, y);
      if (ratio > best) best = ratio;
    }
  }
  return best;
}

SlopeField slope_field(const ScalarField& f, const DistanceMatrix& d, double r,
                       BallKind kind, int threads) {
  if (!(r > 0.0)) throw ParameterError("slope scale must be positive");
  if (f.size() != d.size()) throw ParameterError("field and metric have different sizes");
  SlopeField out;
  out.scale = r;
  out.kind = kind;
  out.values.assign(d.size(), 0.0);
  parallel_for(0, d.size(), threads, [&](std::size_t x) {
    const std::vector<std::size_t> members = ball_members(d, x, r, kind);
    out.values[x] = lip_constant(f, members, d);
  });
  return out;
}

double slope_at_within(const ScalarField& f, const DistanceMatrix& d, double r,
                       BallKind kind, std::size_t x, std::span<const std::size_t> subset) {
  std::vector<std::size_t> members;
  for (std::size_t y : subset) {
    const double v = d(x, y);
    const bool in = (kind == BallKind::Open) ? (v < r) : (v <= r);
    if (in) members.push_back(y);
  }
  return lip_constant(f, members, d);
}

SlopeMonotonicityReport slope_monotonicity_check(const ScalarField& f,
                                                 const MonotoneDistanceFamily& family,
                                                 double r, BallKind kind) {
  SlopeMonotonicityReport report;
  for (std::size_t k = 0; k < family.level_count(); ++k) {
    report.per_level.push_back(slope_field(f, family.level(k), r, kind));
  }
  report.limit = slope_field(f, family.limit(), r, kind);

  auto compare = [&](const SlopeField& lo_metric, const SlopeField& hi_metric, std::size_t level) {
    // lo_metric belongs to the smaller distance, so its slopes must dominate.
    for (std::size_t x = 0; x < lo_metric.values.size(); ++x) {
      const double margin = lo_metric.values[x] - hi_metric.values[x];
      if (margin < report.worst_margin) {
        report.worst_margin = margin;
        report.worst_level = level;
        report.worst_point = x;
      }
      if (hi_metric.values[x] > lo_metric.values[x] * (1.0 + kRelSlack)) {
        report.ok = false;
      }
    }
  };
  for (std::size_t k = 0; k + 1 < family.level_count(); ++k) {
    compare(report.per_level[k], report.per_level[k + 1], k);
  }
  compare(report.per_level.back(), report.limit, family.level_count() - 1);
  if (!report.ok) {
    log_warn("slope monotonicity violated at level " + std::to_string(report.worst_level) +
             ", point " + std::to_string(report.worst_point) + ", margin " +
             std::to_string(report.worst_margin));
  }
  return report;
}

ScalarField cone_lower_approx(const ScalarField& f, std::span<const std::size_t> anchors,
                              double L, unsigned n, const DistanceMatrix& d) {
  if (anchors.empty()) throw ParameterError("cone approximation needs at least one anchor");
  if (n < 1) throw ParameterError("cone offset parameter n must be >= 1");
  if (!(L >= 0.0) || !std::isfinite(L)) throw ParameterError("Lipschitz bound must be finite and >= 0");
  check_indices(anchors, d.size());
  const double anchor_lip = lip_constant(f, anchors, d);
  if (L < anchor_lip) {
    log_warn("cone bound L = " + std::to_string(L) + " is below the anchor Lipschitz constant " +
             std::to_string(anchor_lip) + "; the approximant may exceed f");
  }
  const double offset = 1.0 / static_cast<double>(n);
  std::vector<double> values(d.size());
  for (std::size_t x = 0; x < d.size(); ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : anchors) {
      best = std::max(best, -L * d(x, j) + f[j]);
    }
    values[x] = best - offset;
  }
  return ScalarField(std::move(values));
}

ApproxLipResult approx_lipschitz(const ScalarField& f, std::span<const std::size_t> K,
                                 double eps, const MonotoneDistanceFamily& family,
                                 std::size_t min_level) {
  if (!(eps > 0.0)) throw ParameterError("approximation tolerance must be positive");
  if (K.empty()) throw ParameterError("compact set K must be nonempty");
  check_indices(K, family.point_count());

  const double L = lip_constant(f, family.limit());
  const double n_real = std::ceil(2.0 / eps);
  const unsigned n = n_real > 4e9 ? 4000000000u : static_cast<unsigned>(n_real);

  auto try_level = [&](std::size_t level, ScalarField& g_out, double& gap_out,
                       double& lip_out) -> bool {
    g_out = cone_lower_approx(f, K, L, n, family.level(level));
    gap_out = linf_gap_on(g_out, f, std::vector<std::size_t>(K.begin(), K.end()));
    lip_out = lip_constant(g_out, family.level(level));
    return gap_out <= eps && lip_out <= L * (1.0 + kRelSlack);
  };

  std::size_t best_level = min_level;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t level = min_level; level < family.level_count(); ++level) {
    ScalarField g;
    double gap = 0.0, lip_g = 0.0;
    if (try_level(level, g, gap, lip_g)) {
      ApproxLipResult result;
      result.level = level;
      result.g = std::move(g);
      result.report.level = level;
      result.report.level_unconstrained = level;
      result.report.n = n;
      result.report.max_gap_on_K = gap;
      result.report.lip_g = lip_g;
      result.report.lip_f_limit = L;
      if (min_level > 0) {
        // Diagnostic: where would the scan have landed without the floor?
        for (std::size_t lo = 0; lo < level; ++lo) {
          ScalarField g2;
          double gap2 = 0.0, lip2 = 0.0;
          if (try_level(lo, g2, gap2, lip2)) {
            result.report.level_unconstrained = lo;
            break;
          }
        }
      }
      return result;
    }
    if (gap < best_gap) {
      best_gap = gap;
      best_level = level;
    }
  }
  throw ExhaustionError("lipschitz",
                        "no family level meets the approximation bound eps = " +
                            std::to_string(eps) + " (best gap " + std::to_string(best_gap) +
                            " at level " + std::to_string(best_level) + ")",
                        best_level, best_gap);
}

}  // namespace moscolab
