#include "moscolab/mosco.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moscolab/errors.hpp"
#include "moscolab/lipschitz.hpp"
#include "moscolab/logging.hpp"

namespace moscolab {

namespace {
constexpr double kRelSlack = 1e-12;
}

LiminfReport gamma_liminf_check(const MonotoneDistanceFamily& family,
                                const FunctionSequence& sequence, const EnergyConfig& config) {
  config.validate();
  if (config.backend != EnergyBackend::Slope) {
    throw ParameterError("gamma_liminf_check is defined for the slope backend");
  }
  if (sequence.terms.empty()) throw ParameterError("empty function sequence");
  if (sequence.terms.size() > family.level_count()) {
    throw ParameterError("sequence longer than the family has levels");
  }
  for (const auto& term : sequence.terms) {
    if (term.size() != family.point_count()) {
      throw ParameterError("sequence term lives on a different point set");
    }
  }
  if (sequence.limit.size() != family.point_count()) {
    throw ParameterError("sequence limit lives on a different point set");
  }

  const std::vector<double>& m = family.base().measure();
  LiminfReport report;
  report.energy_limit_f = asymptotic_energy(sequence.limit, family.limit(), m, config).value;

  double max_linf = 0.0;
  double max_slope = 0.0;
  for (std::size_t i = 0; i < sequence.terms.size(); ++i) {
    const ScalarField& fi = sequence.terms[i];
    const double e_level = asymptotic_energy(fi, family.level(i), m, config).value;
    const double e_limit = asymptotic_energy(fi, family.limit(), m, config).value;
    report.energy_level.push_back(e_level);
    report.energy_limit_fi.push_back(e_limit);
    report.lp_gaps.push_back(lp_gap_integral(fi, sequence.limit, config.p, m));
    if (e_limit > e_level * (1.0 + kRelSlack)) report.kernel_ok = false;
    max_linf = std::max(max_linf, linf_gap(fi, sequence.limit));
    const SlopeField s = slope_field(fi, family.limit(), config.scale, config.kind);
    for (double v : s.values) max_slope = std::max(max_slope, v);
  }
  {
    const SlopeField s = slope_field(sequence.limit, family.limit(), config.scale, config.kind);
    for (double v : s.values) max_slope = std::max(max_slope, v);
  }

  // |E(f_i) - E(f)| <= m(X) M^{p-1} * (2 ||f_i - f||_inf / delta_min): the
  // slope of the difference is controlled by the least positive distance.
  const double delta_min = family.limit().min_positive_entry();
  const double slope_shift = std::isfinite(delta_min) ? 2.0 * max_linf / delta_min : 0.0;
  report.kappa = family.base().total_mass() * std::pow(max_slope, config.p - 1.0) * slope_shift;

  double min_energy = report.energy_level.front();
  for (double e : report.energy_level) min_energy = std::min(min_energy, e);
  report.liminf_margin = min_energy - report.energy_limit_f;
  report.liminf_ok = report.liminf_margin >= -report.kappa * (1.0 + kRelSlack) - 1e-300;
  return report;
}

std::pair<RecoverySequence, LimsupReport> recovery_sequence(const ScalarField& f,
                                                            const MonotoneDistanceFamily& family,
                                                            const EnergyConfig& config,
                                                            std::size_t schedule_len) {
  config.validate();
  if (config.backend != EnergyBackend::Slope) {
    throw ParameterError("recovery_sequence is defined for the slope backend");
  }
  if (schedule_len < 1) throw ParameterError("recovery schedule must have at least one term");
  const std::vector<double>& m = family.base().measure();

  RecoverySequence seq;
  std::vector<ScalarField> block_fields;
  std::size_t floor_level = 0;
  for (std::size_t n = 1; n <= schedule_len; ++n) {
    if (floor_level >= family.level_count()) {
      seq.truncated = true;
      log_info("recovery schedule truncated at n = " + std::to_string(n) +
               ": family levels exhausted");
      break;
    }
    const double eps = 1.0 / static_cast<double>(n);
    SlopeControlResult run =
        approx_with_slope_control(f, eps, family, config.p, config.scale, config.kind, floor_level);
    if (!run.report.success) {
      log_warn("recovery block n = " + std::to_string(n) + " returned a flagged pipeline result");
    }
    RecoveryBlock block;
    block.n = n;
    block.level = run.level;
    block.eps = eps;
    block.lp_gap = lp_gap_integral(run.g, f, config.p, m);
    const EnergyReport e = asymptotic_energy(run.g, family.level(run.level), m, config);
    block.energy = e.value;
    block.slope_integral = config.p * e.value;
    block.report = run.report;
    floor_level = run.level + 1;
    if (seq.blocks.empty()) seq.first_level = run.level;
    seq.blocks.push_back(std::move(block));
    block_fields.push_back(std::move(run.g));
  }

  LimsupReport limsup;
  limsup.energy_limit_f = asymptotic_energy(f, family.limit(), m, config).value;
  if (seq.blocks.empty()) {
    limsup.limsup_ok = false;
    return {seq, limsup};
  }

  // Assemble f_i := g_n for iota(n) <= i < iota(n+1), last block to the end.
  for (std::size_t b = 0; b < seq.blocks.size(); ++b) {
    const std::size_t lo = seq.blocks[b].level;
    const std::size_t hi =
        (b + 1 < seq.blocks.size()) ? seq.blocks[b + 1].level : family.level_count();
    for (std::size_t i = lo; i < hi; ++i) seq.assembled_block.push_back(b);
  }

  const std::size_t first = seq.blocks.front().level;
  for (std::size_t offset = 0; offset < seq.assembled_block.size(); ++offset) {
    const std::size_t i = first + offset;
    const std::size_t b = seq.assembled_block[offset];
    const double e_i = asymptotic_energy(block_fields[b], family.level(i), m, config).value;
    limsup.energy_per_level.push_back(e_i);
    limsup.block_bound_per_level.push_back(seq.blocks[b].energy);
    if (e_i > seq.blocks[b].energy * (1.0 + kRelSlack)) limsup.chain_ok = false;
  }

  const RecoveryBlock& last = seq.blocks.back();
  double max_tail = 0.0;
  for (std::size_t offset = 0; offset < seq.assembled_block.size(); ++offset) {
    if (seq.assembled_block[offset] == seq.blocks.size() - 1) {
      max_tail = std::max(max_tail, limsup.energy_per_level[offset]);
    }
  }
  limsup.limsup_margin = limsup.energy_limit_f - max_tail;
  limsup.schedule_tail = last.eps;
  const double integral_excess =
      last.report.slope_integral_g - last.report.slope_integral_f - last.eps;
  limsup.deviation = std::max(0.0, integral_excess) / config.p;
  limsup.limsup_ok = -limsup.limsup_margin <= limsup.schedule_tail + limsup.deviation + 1e-300;
  return {seq, limsup};
}

HilbertianityStability hilbertianity_stability_experiment(const MonotoneDistanceFamily& family,
                                                          const EnergyConfig& config,
                                                          std::size_t trials, std::uint64_t seed) {
  config.validate();
  if (config.p != 2.0) throw ParameterError("the stability experiment requires p = 2");
  const std::vector<double>& m = family.base().measure();
  HilbertianityStability out;
  out.all_hilbertian = true;
  for (std::size_t i = 0; i < family.level_count(); ++i) {
    out.per_level.push_back(hilbertianity_scan(family.level(i), m, config, trials, seed));
    out.all_hilbertian = out.all_hilbertian && out.per_level.back().hilbertian;
  }
  out.limit = hilbertianity_scan(family.limit(), m, config, trials, seed);
  out.all_hilbertian = out.all_hilbertian && out.limit.hilbertian;
  return out;
}

SnowflakeTable snowflake_counterexample(const MetricMeasureSpace& base, const ScalarField& f,
                                        double p, std::span<const double> radii,
                                        std::span<const std::size_t> levels, BallKind kind) {
  if (!(p > 1.0)) throw ParameterError("exponent p must exceed 1");
  if (radii.empty()) throw ParameterError("radius grid is empty");
  if (levels.empty()) throw ParameterError("level set is empty");
  double r_min = radii.front(), r_max = radii.front();
  for (double r : radii) {
    if (!(r > 0.0)) throw ParameterError("radii must be positive");
    r_min = std::min(r_min, r);
    r_max = std::max(r_max, r);
  }
  if (r_max < 10.0 * r_min * (1.0 - kRelSlack)) {
    throw ParameterError("radius grid must span at least one decade");
  }
  for (std::size_t i : levels) {
    if (i < 2) throw ParameterError("snowflake level indices must be >= 2");
  }
  if (base.max_distance() > 1.0) {
    throw DomainError("snowflake counterexample requires d <= 1");
  }

  const std::vector<double>& m = base.measure();
  SnowflakeTable table;
  table.radii.assign(radii.begin(), radii.end());
  table.lip_f = lip_constant(f, base.dist());

  EnergyConfig cfg;
  cfg.p = p;
  cfg.kind = kind;
  cfg.backend = EnergyBackend::Slope;

  for (double r : radii) {
    cfg.scale = r;
    table.base_energy.push_back(asymptotic_energy(f, base.dist(), m, cfg).value);
  }

  for (std::size_t level : levels) {
    const double alpha = 1.0 - 1.0 / static_cast<double>(level);
    const DistanceMatrix d_i = snowflake_transform(base.dist(), alpha);
    std::vector<double> log_r, log_e;
    for (double r : radii) {
      const SlopeField slopes = slope_field(f, d_i, r, kind);
      double max_slope = 0.0;
      for (double v : slopes.values) max_slope = std::max(max_slope, v);
      double integral = 0.0;
      for (std::size_t x = 0; x < f.size(); ++x) {
        integral += std::pow(slopes.values[x], p) * m[x];
      }
      SnowflakeRow row;
      row.level = level;
      row.radius = r;
      row.energy = integral / p;
      row.bound = table.lip_f * std::pow(r, 1.0 / (static_cast<double>(level) - 1.0));
      row.margin = row.bound - max_slope;
      if (max_slope > row.bound * (1.0 + kRelSlack)) table.pointwise_ok = false;
      table.rows.push_back(row);
      if (row.energy > 0.0) {
        log_r.push_back(std::log(r));
        log_e.push_back(std::log(row.energy));
      }
    }
    SnowflakeFit fit;
    fit.level = level;
    fit.predicted_exponent = p / (static_cast<double>(level) - 1.0);
    fit.points_used = log_r.size();
    if (log_r.size() >= 2) {
      double mean_x = 0.0, mean_y = 0.0;
      for (std::size_t k = 0; k < log_r.size(); ++k) {
        mean_x += log_r[k];
        mean_y += log_e[k];
      }
      mean_x /= static_cast<double>(log_r.size());
      mean_y /= static_cast<double>(log_r.size());
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t k = 0; k < log_r.size(); ++k) {
        sxy += (log_r[k] - mean_x) * (log_e[k] - mean_y);
        sxx += (log_r[k] - mean_x) * (log_r[k] - mean_x);
      }
      fit.fitted_exponent = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    table.fits.push_back(fit);
  }
  return table;
}

}  // namespace moscolab
