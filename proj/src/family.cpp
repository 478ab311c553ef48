#include "moscolab/family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "moscolab/errors.hpp"
#include "moscolab/parallel.hpp"

namespace moscolab {

namespace {

std::string pair_str(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

void check_level_is_metric(const DistanceMatrix& level, std::size_t index) {
  const MetricValidation verdict = validate_metric(level);
  if (!verdict.ok()) {
    throw DomainError("family level " + std::to_string(index) + " is not a metric: " +
                      verdict.violations.front().describe());
  }
}

void check_pointwise_leq(const DistanceMatrix& lo, const DistanceMatrix& hi,
                         const std::string& what) {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    for (std::size_t j = i + 1; j < lo.size(); ++j) {
      if (lo(i, j) > hi(i, j) * (1.0 + kMonotoneRelSlack)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g > %.17g", lo(i, j), hi(i, j));
        throw InvariantError("metric_core", "family monotonicity violated " + what +
                                                " at pair " + pair_str(i, j) + ": " + buf,
                             lo(i, j) - hi(i, j));
      }
    }
  }
}

void check_positivity_pattern(const DistanceMatrix& level, const DistanceMatrix& limit,
                              std::size_t index) {
  for (std::size_t i = 0; i < level.size(); ++i) {
    for (std::size_t j = i + 1; j < level.size(); ++j) {
      if ((level(i, j) > 0.0) != (limit(i, j) > 0.0)) {
        throw InvariantError("metric_core",
                             "level " + std::to_string(index) +
                                 " induces a different topology: positivity pattern differs from the"
                                 " limit at pair " + pair_str(i, j));
      }
    }
  }
}

}  // namespace

MonotoneDistanceFamily::MonotoneDistanceFamily(MetricMeasureSpace base,
                                               std::vector<DistanceMatrix> levels)
    : base_(std::move(base)), levels_(std::move(levels)) {
  if (levels_.empty()) throw ParameterError("a distance family needs at least one level");
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (levels_[k].size() != base_.size()) {
      throw ParameterError("family level " + std::to_string(k) + " has wrong dimension");
    }
    check_level_is_metric(levels_[k], k);
    check_positivity_pattern(levels_[k], base_.dist(), k);
  }
  for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
    check_pointwise_leq(levels_[k], levels_[k + 1],
                        "between levels " + std::to_string(k) + " and " + std::to_string(k + 1));
  }
  check_pointwise_leq(levels_.back(), base_.dist(), "between the last level and the limit");
}

MonotoneDistanceFamily make_snowflake_family(const MetricMeasureSpace& base,
                                             std::vector<double> alphas_decreasing) {
  if (alphas_decreasing.empty()) throw ParameterError("snowflake schedule is empty");
  for (std::size_t k = 0; k + 1 < alphas_decreasing.size(); ++k) {
    if (!(alphas_decreasing[k] > alphas_decreasing[k + 1])) {
      throw ParameterError("snowflake schedule must be strictly decreasing so the levels increase");
    }
  }
  std::vector<DistanceMatrix> levels;
  levels.reserve(alphas_decreasing.size());
  for (double alpha : alphas_decreasing) {
    levels.push_back(snowflake_transform(base.dist(), alpha));
  }
  MetricMeasureSpace limit_space = base.with_distance(levels.back());
  return MonotoneDistanceFamily(std::move(limit_space), std::move(levels));
}

TensorAt identity_tensor() {
  return [](const std::vector<double>& point, double /*eps*/) {
    const std::size_t d = point.size();
    std::vector<double> g(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) g[i * d + i] = 1.0;
    return g;
  };
}

TensorAt heisenberg_tensor() {
  return [](const std::vector<double>& point, double eps) {
    if (point.size() != 3) throw ParameterError("heisenberg tensor needs a 3-axis grid");
    if (!(eps > 0.0)) throw ParameterError("heisenberg penalty must be positive");
    const double x = point[0];
    const double y = point[1];
    const double inv2 = 1.0 / (eps * eps);
    // diag(1,1,0) + eps^-2 * theta theta^T with theta = (y/2, -x/2, 1).
    const double tx = 0.5 * y;
    const double ty = -0.5 * x;
    const double tz = 1.0;
    std::vector<double> g(9, 0.0);
    g[0] = 1.0 + inv2 * tx * tx;
    g[1] = inv2 * tx * ty;
    g[2] = inv2 * tx * tz;
    g[3] = g[1];
    g[4] = 1.0 + inv2 * ty * ty;
    g[5] = inv2 * ty * tz;
    g[6] = g[2];
    g[7] = g[5];
    g[8] = inv2 * tz * tz;
    return g;
  };
}

namespace {

bool cholesky_pd(std::vector<double> a, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (!(sum > 0.0)) return false;
        a[i * d + j] = std::sqrt(sum);
      } else {
        a[i * d + j] = sum / (a[j * d + j]);
      }
    }
  }
  return true;
}

double quantize_weight(double w) {
  return std::ldexp(std::round(std::ldexp(w, 32)), -32);
}

struct GridGraph {
  std::vector<std::vector<double>> points;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // u < v, canonical order
};

GridGraph build_grid_graph(const GridSpec& spec) {
  if (spec.dims.empty()) throw ParameterError("grid needs at least one axis");
  if (!(spec.step > 0.0)) throw ParameterError("grid step must be positive");
  std::size_t n = 1;
  for (std::size_t d : spec.dims) {
    if (d == 0) throw ParameterError("grid axis with zero points");
    n *= d;
  }
  const std::size_t dim = spec.dims.size();

  GridGraph graph;
  graph.points.resize(n);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> coords(dim);
    for (std::size_t a = 0; a < dim; ++a) {
      coords[a] = (static_cast<double>(idx[a]) -
                   0.5 * static_cast<double>(spec.dims[a] - 1)) * spec.step;
    }
    graph.points[p] = std::move(coords);
    for (std::size_t a = dim; a-- > 0;) {
      if (++idx[a] < spec.dims[a]) break;
      idx[a] = 0;
    }
  }

  // Multi-index strides, last axis fastest (row-major as generated above).
  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t a = dim - 1; a-- > 0;) stride[a] = stride[a + 1] * spec.dims[a + 1];

  std::vector<std::vector<int>> offsets;
  if (spec.diagonal_neighbors) {
    std::vector<int> cur(dim, -1);
    while (true) {
      bool nonzero = false;
      for (int c : cur) nonzero = nonzero || (c != 0);
      if (nonzero) offsets.push_back(cur);
      std::size_t a = dim;
      bool rolled_over = true;
      while (a-- > 0) {
        if (++cur[a] <= 1) { rolled_over = false; break; }
        cur[a] = -1;
      }
      if (rolled_over) break;
    }
  } else {
    for (std::size_t a = 0; a < dim; ++a) {
      std::vector<int> off(dim, 0);
      off[a] = 1;
      offsets.push_back(off);
    }
  }

  std::vector<std::size_t> mi(dim, 0);
  for (std::size_t p = 0; p < n; ++p) {
    for (const auto& off : offsets) {
      bool valid = true;
      std::size_t q = 0;
      for (std::size_t a = 0; a < dim && valid; ++a) {
        const long long next = static_cast<long long>(mi[a]) + off[a];
        if (next < 0 || next >= static_cast<long long>(spec.dims[a])) {
          valid = false;
        } else {
          q += static_cast<std::size_t>(next) * stride[a];
        }
      }
      if (!valid || q == p) continue;
      graph.edges.emplace_back(std::min(p, q), std::max(p, q));
    }
    for (std::size_t a = dim; a-- > 0;) {
      if (++mi[a] < spec.dims[a]) break;
      mi[a] = 0;
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
  return graph;
}

std::vector<double> edge_weights(const GridGraph& graph, const TensorAt& tensor, double eps) {
  const std::size_t dim = graph.points.empty() ? 0 : graph.points.front().size();
  std::vector<std::vector<double>> tensors(graph.points.size());
  for (std::size_t p = 0; p < graph.points.size(); ++p) {
    tensors[p] = tensor(graph.points[p], eps);
    if (tensors[p].size() != dim * dim) {
      throw GeneratorError("metric_core", "tensor generator returned a matrix of wrong size");
    }
    if (!cholesky_pd(tensors[p], dim)) {
      throw GeneratorError("metric_core", "tensor generator returned a non-positive-definite matrix"
                                          " at point " + std::to_string(p));
    }
  }
  std::vector<double> weights(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [u, v] = graph.edges[e];
    double quad = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = graph.points[v][i] - graph.points[u][i];
      for (std::size_t j = 0; j < dim; ++j) {
        const double dj = graph.points[v][j] - graph.points[u][j];
        quad += 0.5 * (tensors[u][i * dim + j] + tensors[v][i * dim + j]) * di * dj;
      }
    }
    const double w = quantize_weight(std::sqrt(quad));
    if (!(w > 0.0)) {
      throw GeneratorError("metric_core", "degenerate edge weight at edge " +
                                              pair_str(u, v) + " (tensor too small for the step)");
    }
    weights[e] = w;
  }
  return weights;
}

DistanceMatrix all_pairs_shortest_path(const GridGraph& graph, const std::vector<double>& weights,
                                       int threads) {
  const std::size_t n = graph.points.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [u, v] = graph.edges[e];
    adj[u].emplace_back(v, weights[e]);
    adj[v].emplace_back(u, weights[e]);
  }
  std::vector<std::vector<double>> rows(n);
  parallel_for(0, n, threads, [&](std::size_t src) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[src] = 0.0;
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        const double cand = du + w;
        if (cand < dist[v]) {
          dist[v] = cand;
          heap.emplace(cand, v);
        }
      }
    }
    rows[src] = std::move(dist);
  });
  DistanceMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!std::isfinite(rows[i][j])) {
        throw GeneratorError("metric_core", "grid graph is disconnected at pair " + pair_str(i, j));
      }
      out.set_symmetric(i, j, rows[i][j]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> grid_points(const GridSpec& spec) {
  return build_grid_graph(spec).points;
}

DistanceMatrix grid_shortest_path_metric(const GridSpec& spec, const TensorAt& tensor,
                                         double eps, int threads) {
  const GridGraph graph = build_grid_graph(spec);
  return all_pairs_shortest_path(graph, edge_weights(graph, tensor, eps), threads);
}

MetricMeasureSpace grid_space(const GridSpec& spec, const TensorAt& tensor, double eps,
                              int threads) {
  const GridGraph graph = build_grid_graph(spec);
  const DistanceMatrix dist =
      all_pairs_shortest_path(graph, edge_weights(graph, tensor, eps), threads);
  const double cell = std::pow(spec.step, static_cast<double>(spec.dims.size()));
  std::vector<double> measure(graph.points.size(), cell);
  return MetricMeasureSpace(dist, std::move(measure), {}, graph.points);
}

MonotoneDistanceFamily riemannian_grid_family(const GridSpec& spec, const TensorAt& tensor,
                                              const std::vector<double>& epsilons_decreasing,
                                              const DistanceMatrix* explicit_limit,
                                              int threads) {
  if (epsilons_decreasing.empty()) throw ParameterError("penalty schedule is empty");
  for (std::size_t k = 0; k + 1 < epsilons_decreasing.size(); ++k) {
    if (!(epsilons_decreasing[k] > epsilons_decreasing[k + 1])) {
      throw ParameterError("penalty schedule must be strictly decreasing");
    }
  }
  const GridGraph graph = build_grid_graph(spec);

  std::vector<std::vector<double>> weights_per_level;
  weights_per_level.reserve(epsilons_decreasing.size());
  for (double eps : epsilons_decreasing) {
    weights_per_level.push_back(edge_weights(graph, tensor, eps));
  }
  for (std::size_t k = 0; k + 1 < weights_per_level.size(); ++k) {
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      if (weights_per_level[k][e] > weights_per_level[k + 1][e]) {
        throw GeneratorError("metric_core",
                             "edge weights not monotone: edge " +
                                 pair_str(graph.edges[e].first, graph.edges[e].second) +
                                 " decreases from level " + std::to_string(k) + " to " +
                                 std::to_string(k + 1),
                             weights_per_level[k][e] - weights_per_level[k + 1][e]);
      }
    }
  }

  std::vector<DistanceMatrix> levels;
  levels.reserve(weights_per_level.size());
  for (const auto& w : weights_per_level) {
    levels.push_back(all_pairs_shortest_path(graph, w, threads));
  }

  DistanceMatrix limit = explicit_limit != nullptr ? *explicit_limit : levels.back();
  const double cell = std::pow(spec.step, static_cast<double>(spec.dims.size()));
  std::vector<double> measure(graph.points.size(), cell);
  MetricMeasureSpace base(std::move(limit), std::move(measure), {}, graph.points);
  return MonotoneDistanceFamily(std::move(base), std::move(levels));
}

std::vector<double> uniform_convergence_gap(std::span<const DistanceMatrix> levels,
                                            const DistanceMatrix& limit,
                                            const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw ParameterError("uniform_convergence_gap needs a nonempty subset");
  for (std::size_t x : subset) {
    if (x >= limit.size()) throw LookupError("subset index " + std::to_string(x) + " out of range");
  }
  std::vector<double> gaps;
  gaps.reserve(levels.size());
  for (const auto& level : levels) {
    double g = 0.0;
    for (std::size_t a = 0; a < subset.size(); ++a) {
      for (std::size_t b = a + 1; b < subset.size(); ++b) {
        g = std::max(g, std::abs(limit(subset[a], subset[b]) - level(subset[a], subset[b])));
      }
    }
    gaps.push_back(g);
  }
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
    if (gaps[k + 1] > gaps[k] * (1.0 + kMonotoneRelSlack)) {
      throw InvariantError("metric_core",
                           "uniform convergence gaps are not nonincreasing between levels " +
                               std::to_string(k) + " and " + std::to_string(k + 1),
                           gaps[k + 1] - gaps[k]);
    }
  }
  return gaps;
}

std::vector<double> uniform_convergence_gap(const MonotoneDistanceFamily& family,
                                            const std::vector<std::size_t>& subset) {
  std::vector<DistanceMatrix> levels;
  levels.reserve(family.level_count());
  for (std::size_t k = 0; k < family.level_count(); ++k) levels.push_back(family.level(k));
  return uniform_convergence_gap(std::span<const DistanceMatrix>(levels), family.limit(), subset);
}

}  // namespace moscolab
