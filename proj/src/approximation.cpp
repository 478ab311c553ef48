#include "moscolab/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "moscolab/errors.hpp"
#include "moscolab/lipschitz.hpp"
#include "moscolab/logging.hpp"

namespace moscolab {

namespace {

constexpr double kRelSlack = 1e-9;
constexpr int kEgorovMaxHalvings = 200;

std::vector<std::size_t> sorted_unique(std::span<const std::size_t> xs) {
  std::vector<std::size_t> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// min over the subset of (f(y) + C d(x,y)); the canonical C-Lipschitz
/// extension of f restricted to the subset.
ScalarField mcshane_envelope(const ScalarField& f, std::span<const std::size_t> subset,
                             double constant, const DistanceMatrix& d) {
  std::vector<double> values(d.size());
  for (std::size_t x = 0; x < d.size(); ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y : subset) {
      best = std::min(best, f[y] + constant * d(x, y));
    }
    values[x] = best;
  }
  return ScalarField(std::move(values));
}

double subset_mass(const std::vector<std::size_t>& subset, const std::vector<double>& measure) {
  double total = 0.0;
  for (std::size_t x : subset) total += measure[x];
  return total;
}

}  // namespace

EgorovSelection egorov_select(const ScalarField& f, const MetricMeasureSpace& space,
                              std::span<const std::size_t> ambient, double eps_prime,
                              double reference_scale, BallKind kind) {
  if (!(eps_prime > 0.0) || !(eps_prime < 0.25)) {
    throw ParameterError("egorov_select needs eps_prime in (0, 1/4)");
  }
  if (ambient.empty()) throw ParameterError("egorov_select needs a nonempty ambient set");
  if (!(reference_scale > 0.0)) throw ParameterError("reference slope scale must be positive");

  const DistanceMatrix& d = space.dist();
  const std::vector<std::size_t> B = sorted_unique(ambient);
  const SlopeField reference = slope_field(f, d, reference_scale, kind);
  const double min_pos = space.min_positive_distance();

  double radius = reference_scale;
  for (int iter = 0; iter < kEgorovMaxHalvings; ++iter) {
    EgorovSelection sel;
    sel.ambient_ball = B;
    sel.radius = radius;
    sel.eps_prime = eps_prime;
    for (std::size_t x : B) {
      const std::vector<std::size_t> local = ball_members(d, x, 4.0 * radius, kind);
      const double local_lip = lip_constant(f, local, d);
      if (local_lip <= reference.values[x] + eps_prime) sel.good_set.push_back(x);
    }
    double bad = 0.0;
    {
      std::size_t cursor = 0;
      for (std::size_t x : B) {
        if (cursor < sel.good_set.size() && sel.good_set[cursor] == x) {
          ++cursor;
        } else {
          bad += space.measure()[x];
        }
      }
    }
    sel.bad_mass = bad;
    if (bad <= eps_prime) return sel;
    if (4.0 * radius < min_pos) {
      // Every 4r-ball is a singleton here, so the good set is all of B and
      // the loop must already have returned.
      throw InvariantError("approximation", "egorov scan failed to close below the minimal distance");
    }
    radius *= 0.5;
  }
  throw InvariantError("approximation", "egorov radius scan did not terminate");
}

PartitionOfUnity build_partition(std::span<const std::size_t> K, double r,
                                 const DistanceMatrix& d_cover, const DistanceMatrix& d1) {
  if (K.empty()) throw ParameterError("partition of unity needs a nonempty set");
  if (!(r > 0.0)) throw ParameterError("partition radius must be positive");
  const std::vector<std::size_t> domain = sorted_unique(K);

  std::vector<std::size_t> anchors{domain.front()};
  std::vector<double> min_dist(domain.size());
  while (true) {
    double far_dist = -1.0;
    std::size_t far_point = domain.front();
    bool covered = true;
    for (std::size_t idx = 0; idx < domain.size(); ++idx) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a : anchors) best = std::min(best, d_cover(domain[idx], a));
      min_dist[idx] = best;
      if (best >= r) covered = false;
      if (best > far_dist) {
        far_dist = best;
        far_point = domain[idx];
      }
    }
    if (covered) break;
    anchors.push_back(far_point);
  }

  PartitionOfUnity pou;
  pou.anchors = anchors;
  pou.radius = r;
  pou.domain = domain;

  const std::size_t n = d_cover.size();
  const std::size_t k = anchors.size();
  std::vector<std::vector<double>> bumps(k, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t x : domain) {
      const double dist = d_cover(x, anchors[j]);
      if (dist < r) bumps[j][x] = 1.0 - dist / r;
    }
  }
  std::vector<double> sums(n, 0.0);
  for (std::size_t x : domain) {
    for (std::size_t j = 0; j < k; ++j) sums[x] += bumps[j][x];
    if (!(sums[x] > 0.0)) {
      throw InvariantError("approximation",
                           "partition cover misses point " + std::to_string(x));
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> values(n, 0.0);
    std::vector<std::size_t> support;
    for (std::size_t x : domain) {
      if (bumps[j][x] > 0.0) {
        values[x] = bumps[j][x] / sums[x];
        support.push_back(x);
      }
    }
    pou.weights.emplace_back(std::move(values), std::move(support));
  }
  for (std::size_t j = 0; j < k; ++j) {
    pou.lip_bounds_d1.push_back(lip_constant(pou.weights[j], domain, d1));
  }

  for (std::size_t x : domain) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += pou.weights[j][x];
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvariantError("approximation",
                           "partition weights sum to " + std::to_string(total) + " at point " +
                               std::to_string(x),
                           total - 1.0);
    }
  }
  return pou;
}

PatchResult patch(const ScalarField& f, const PartitionOfUnity& partition,
                  const MonotoneDistanceFamily& family, double eps_prime,
                  double egorov_radius, std::size_t min_level) {
  if (!(eps_prime > 0.0)) throw ParameterError("patch needs eps_prime > 0");
  const DistanceMatrix& d = family.limit();
  const std::vector<std::size_t>& K = partition.domain;
  const std::size_t k = partition.anchors.size();
  const double L = lip_constant(f, d);

  // Uniformity threshold i_0: the first level with d <= d_i + eps' r on K.
  const std::vector<double> gaps = [&] {
    std::vector<DistanceMatrix> levels;
    for (std::size_t i = 0; i < family.level_count(); ++i) levels.push_back(family.level(i));
    return uniform_convergence_gap(std::span<const DistanceMatrix>(levels), d, K);
  }();
  std::size_t i0 = family.level_count() - 1;
  bool threshold_met = false;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i] <= eps_prime * egorov_radius) {
      i0 = i;
      threshold_met = true;
      break;
    }
  }
  const std::size_t scan_floor = std::max(min_level, i0);

  PatchResult res;
  res.level_threshold = i0;
  res.threshold_met = threshold_met;
  res.anchor_levels.reserve(k);

  std::vector<ScalarField> locals;  // h_j
  locals.reserve(k);
  std::size_t level = scan_floor;
  std::size_t level_unconstrained = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t anchor = partition.anchors[j];
    const std::vector<std::size_t> b2r = ball_members(d, anchor, 2.0 * egorov_radius, BallKind::Open);
    const double local_lip = lip_constant(f, b2r, d);
    const ScalarField f_j = mcshane_envelope(f, b2r, local_lip, d);
    const double tol = eps_prime / std::max(static_cast<double>(k) * partition.lip_bounds_d1[j], 1.0);
    ApproxLipResult approx = approx_lipschitz(f_j, K, tol, family, scan_floor);
    level = std::max(level, approx.level);
    level_unconstrained = std::max(level_unconstrained, approx.report.level_unconstrained);
    res.anchor_levels.push_back(approx.level);
    locals.push_back(std::move(approx.g));
  }
  res.level = level;
  res.level_unconstrained = level_unconstrained;

  std::vector<double> values(f.size(), 0.0);
  for (std::size_t x : K) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += partition.weights[j][x] * locals[j][x];
    values[x] = acc;
  }
  res.h_tilde = ScalarField(std::move(values), K);

  res.gap_on_K = linf_gap_on(res.h_tilde, f, K);
  if (res.gap_on_K > eps_prime * (1.0 + kRelSlack)) {
    throw InvariantError("approximation",
                         "patched function strays from f on K by " + std::to_string(res.gap_on_K) +
                             " > eps_prime = " + std::to_string(eps_prime),
                         res.gap_on_K - eps_prime);
  }

  res.lip_on_K = lip_constant(res.h_tilde, K, family.level(level));
  res.lip_bound = 5.0 * L + eps_prime;
  res.lip_bound_ok = res.lip_on_K <= res.lip_bound * (1.0 + kRelSlack);
  if (!res.lip_bound_ok && threshold_met) {
    throw InvariantError("approximation",
                         "patched Lipschitz constant " + std::to_string(res.lip_on_K) +
                             " exceeds 5L + eps_prime = " + std::to_string(res.lip_bound) +
                             " with the uniformity threshold met",
                         res.lip_on_K - res.lip_bound);
  }
  if (!res.lip_bound_ok) {
    log_warn("patch bound exceeded without a level past the uniformity threshold; "
             "measured " + std::to_string(res.lip_on_K) + " vs bound " +
             std::to_string(res.lip_bound));
  }
  return res;
}

ScalarField extend_slope_controlled(const ScalarField& h_tilde, std::span<const std::size_t> K,
                                    const DistanceMatrix& d_i, double eps_prime,
                                    double* extension_constant) {
  if (K.empty()) throw ParameterError("extension needs a nonempty set K");
  const std::vector<std::size_t> domain = sorted_unique(K);
  const double c_prime = lip_constant(h_tilde, domain, d_i) + eps_prime;
  if (extension_constant != nullptr) *extension_constant = c_prime;

  std::vector<double> values(d_i.size());
  std::size_t cursor = 0;
  for (std::size_t x = 0; x < d_i.size(); ++x) {
    if (cursor < domain.size() && domain[cursor] == x) {
      values[x] = h_tilde[x];  // McShane agrees with h_tilde on K; copy keeps it bitwise
      ++cursor;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y : domain) best = std::min(best, h_tilde[y] + c_prime * d_i(x, y));
    values[x] = best;
  }
  return ScalarField(std::move(values));
}

std::pair<ScalarField, CutoffField> apply_cutoff(const ScalarField& h, const ScalarField& f,
                                                 std::span<const std::size_t> K,
                                                 const DistanceMatrix& d_i) {
  const std::vector<std::size_t> domain = sorted_unique(K);
  std::vector<std::size_t> anchor_set;  // spt(f) n K
  std::set_intersection(f.support().begin(), f.support().end(), domain.begin(), domain.end(),
                        std::back_inserter(anchor_set));

  CutoffField cut;
  if (anchor_set.empty()) {
    cut.eta = ScalarField::zeros(h.size());
    cut.empty_core = true;
    return {ScalarField::zeros(h.size()), cut};
  }

  std::vector<double> eta(h.size(), 0.0);
  std::vector<double> g(h.size(), 0.0);
  for (std::size_t x = 0; x < h.size(); ++x) {
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t y : anchor_set) dist = std::min(dist, d_i(x, y));
    const double value = std::min(2.0 - dist, 1.0);
    eta[x] = std::max(value, 0.0);
    if (dist <= 1.0) cut.core.push_back(x);
    if (dist <= 2.0) cut.halo.push_back(x);
    g[x] = eta[x] * h[x];
  }
  cut.eta = ScalarField(std::move(eta));

  ScalarField g_field{std::move(g)};
  const double lip_g = lip_constant(g_field, d_i);
  const double bound = lip_constant(h, d_i) + sup_abs(h);
  if (lip_g > bound * (1.0 + kRelSlack)) {
    throw InvariantError("approximation",
                         "cutoff product rule violated: Lip(g) = " + std::to_string(lip_g) +
                             " > Lip(h) + sup|h| = " + std::to_string(bound),
                         lip_g - bound);
  }
  return {std::move(g_field), cut};
}

SlopeControlResult approx_with_slope_control(const ScalarField& f, double eps,
                                             const MonotoneDistanceFamily& family, double p,
                                             double slope_scale, BallKind kind,
                                             std::size_t min_level) {
  if (!(eps > 0.0)) throw ParameterError("approximation target eps must be positive");
  if (!(p > 1.0)) throw ParameterError("exponent p must exceed 1");
  if (!(slope_scale > 0.0)) throw ParameterError("slope scale must be positive");
  const MetricMeasureSpace& space = family.base();
  const DistanceMatrix& d = family.limit();
  const std::vector<double>& m = space.measure();

  SlopeControlResult result;
  result.report.p = p;
  result.report.scale = slope_scale;
  result.report.eps_target = eps;

  if (f.support_empty()) {
    result.g = ScalarField::zeros(f.size());
    result.level = min_level;
    result.report.level = min_level;
    result.report.trivial_path = true;
    result.report.lp_ok = true;
    result.report.slope_ok = true;
    result.report.success = true;
    return result;
  }

  const double L = lip_constant(f, d);
  const double sup_f = sup_abs(f);

  // Support ball under d_1 and the ambient ball B of radius R + 2.
  const std::size_t base_point = f.support().front();
  const DistanceMatrix& d1 = family.level(0);
  double support_radius = 0.0;
  for (std::size_t x : f.support()) support_radius = std::max(support_radius, d1(base_point, x));
  const double min_pos_d1 = d1.min_positive_entry();
  const double R = support_radius + (std::isfinite(min_pos_d1) ? 0.5 * min_pos_d1 : 1.0);
  const std::vector<std::size_t> ambient = ball_members(d1, base_point, R + 2.0, BallKind::Closed);

  const double bracket = (3.0 * p * std::pow(L, p - 1.0) + 1.0) * subset_mass(ambient, m) +
                         std::pow(15.0 * L + sup_f + 7.0, p);
  double eps_prime = std::min(eps / bracket, 0.25 * (1.0 - 1e-12));

  const SlopeField slope_f = slope_field(f, d, slope_scale, kind);
  double integral_f = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    integral_f += std::pow(slope_f.values[x], p) * m[x];
  }

  SlopeControlResult best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (unsigned attempt = 0; attempt <= kSlopeControlRetryBudget; ++attempt, eps_prime *= 0.5) {
    const EgorovSelection egorov = egorov_select(f, space, ambient, eps_prime, slope_scale, kind);
    const PartitionOfUnity partition =
        build_partition(egorov.good_set, egorov.radius, d, d1);
    const PatchResult patched = patch(f, partition, family, eps_prime, egorov.radius, min_level);
    const std::size_t level = patched.level;
    const DistanceMatrix& d_i = family.level(level);

    double c_prime = 0.0;
    const ScalarField h =
        extend_slope_controlled(patched.h_tilde, egorov.good_set, d_i, eps_prime, &c_prime);

    double deviation = 0.0;
    {
      const SlopeField slope_h = slope_field(h, d_i, slope_scale, kind);
      for (std::size_t x : egorov.good_set) {
        const double inner =
            slope_at_within(patched.h_tilde, d_i, slope_scale, kind, x, egorov.good_set);
        deviation = std::max(deviation, slope_h.values[x] - inner);
      }
    }

    auto [g, cut] = apply_cutoff(h, f, egorov.good_set, d_i);

    const double lp_gap = lp_gap_integral(g, f, p, m);
    const SlopeField slope_g = slope_field(g, d_i, slope_scale, kind);
    double integral_g = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      integral_g += std::pow(slope_g.values[x], p) * m[x];
    }

    SlopeControlResult current;
    current.level = level;
    current.g = std::move(g);
    current.report.level = level;
    current.report.p = p;
    current.report.scale = slope_scale;
    current.report.eps_target = eps;
    current.report.eps_prime_final = eps_prime;
    current.report.lp_gap = lp_gap;
    current.report.slope_integral_f = integral_f;
    current.report.slope_integral_g = integral_g;
    current.report.energy_excess = integral_g - integral_f;
    current.report.lip_f = L;
    current.report.constant_C = 5.0 * L + 2.0 * eps_prime;
    current.report.retries = attempt;
    current.report.lp_ok = lp_gap <= eps;
    current.report.slope_ok = integral_g <= integral_f + eps;
    current.report.success = current.report.lp_ok && current.report.slope_ok;
    current.report.steps.egorov_radius = egorov.radius;
    current.report.steps.bad_mass = egorov.bad_mass;
    current.report.steps.ambient_size = ambient.size();
    current.report.steps.good_set_size = egorov.good_set.size();
    current.report.steps.partition_size = partition.anchors.size();
    current.report.steps.extension_constant = c_prime;
    current.report.steps.slope_deviation = deviation;
    current.report.steps.level_threshold = patched.level_threshold;
    current.report.steps.threshold_met = patched.threshold_met;
    current.report.steps.level_unconstrained = patched.level_unconstrained;
    current.report.steps.patch_lip_on_K = patched.lip_on_K;
    current.report.steps.patch_lip_bound = patched.lip_bound;
    current.report.steps.patch_bound_ok = patched.lip_bound_ok;
    current.report.steps.patch_gap_on_K = patched.gap_on_K;
    current.report.steps.cutoff_empty_core = cut.empty_core;

    if (current.report.success) return current;

    const double violation = std::max(lp_gap - eps, integral_g - integral_f - eps);
    if (violation < best_violation) {
      best_violation = violation;
      best = std::move(current);
    }
    log_info("slope-control attempt " + std::to_string(attempt) + " missed its bound; halving eps'");
  }
  log_warn("slope-control retry budget exhausted; returning flagged best-effort result");
  return best;
}

}  // namespace moscolab
