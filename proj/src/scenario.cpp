#include "moscolab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "moscolab/approximation.hpp"
#include "moscolab/csv_io.hpp"
#include "moscolab/energy.hpp"
#include "moscolab/errors.hpp"
#include "moscolab/family.hpp"
#include "moscolab/lipschitz.hpp"
#include "moscolab/logging.hpp"
#include "moscolab/metric_space.hpp"
#include "moscolab/mosco.hpp"
#include "moscolab/parallel.hpp"
#include "moscolab/scalar_field.hpp"

namespace moscolab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json parse_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError&) {
    throw;
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

const json& require_key(const json& obj, const std::string& key, const std::string& context) {
  if (!obj.contains(key)) {
    throw ConfigError("missing key '" + key + "' (required for " + context + ")");
  }
  return obj.at(key);
}

std::string resolve_path(const std::string& raw, const fs::path& config_dir) {
  fs::path p(raw);
  if (p.is_absolute()) return p.string();
  return (config_dir / p).string();
}

TensorAt tensor_from_config(const json& cfg) {
  const std::string name = require_key(cfg, "name", "a tensor spec").get<std::string>();
  if (name == "identity") return identity_tensor();
  if (name == "heisenberg") return heisenberg_tensor();
  throw ConfigError("unknown tensor '" + name + "' (expected identity|heisenberg)");
}

GridSpec grid_spec_from_config(const json& cfg, const std::string& context) {
  GridSpec spec;
  for (const auto& d : require_key(cfg, "dims", context)) {
    spec.dims.push_back(d.get<std::size_t>());
  }
  spec.step = require_key(cfg, "step", context).get<double>();
  spec.diagonal_neighbors = cfg.value("diagonal_neighbors", false);
  return spec;
}

std::vector<double> weights_for(const json& cfg, std::size_t n) {
  const std::string mode = cfg.value("weights", "uniform");
  if (mode == "uniform") return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (mode == "unit") return std::vector<double>(n, 1.0);
  throw ConfigError("unknown weights mode '" + mode + "' (expected uniform|unit)");
}

MetricMeasureSpace build_space(const json& cfg, std::uint64_t seed, int threads,
                               const fs::path& config_dir) {
  const std::string source = require_key(cfg, "source", "a space spec").get<std::string>();
  if (source == "csv") {
    const auto rows = read_matrix_csv(
        resolve_path(require_key(cfg, "dist", "a csv space").get<std::string>(), config_dir));
    std::vector<double> measure;
    if (cfg.contains("measure")) {
      measure = read_column_csv(resolve_path(cfg.at("measure").get<std::string>(), config_dir));
    } else {
      measure.assign(rows.size(), 1.0 / std::max<std::size_t>(rows.size(), 1));
    }
    return MetricMeasureSpace(rows, std::move(measure));
  }
  if (source == "interval_grid") {
    const std::size_t n = require_key(cfg, "points", "an interval grid").get<std::size_t>();
    if (n < 2) throw ConfigError("interval grid needs at least 2 points");
    DistanceMatrix d(n);
    std::vector<std::vector<double>> coords(n);
    for (std::size_t i = 0; i < n; ++i) {
      coords[i] = {static_cast<double>(i) / static_cast<double>(n - 1)};
      for (std::size_t j = i + 1; j < n; ++j) {
        d.set_symmetric(i, j, (static_cast<double>(j) - static_cast<double>(i)) /
                                  static_cast<double>(n - 1));
      }
    }
    return MetricMeasureSpace(std::move(d), weights_for(cfg, n), {}, std::move(coords));
  }
  if (source == "random_cloud") {
    const std::size_t n = require_key(cfg, "count", "a random cloud").get<std::size_t>();
    const std::size_t dim = cfg.value("dim", std::size_t{3});
    const double max_distance = cfg.value("max_distance", 1.0);
    const double min_separation = cfg.value("min_separation", 0.0);
    if (n < 2) throw ConfigError("random cloud needs at least 2 points");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> pts;
    while (pts.size() < n) {
      std::vector<double> p(dim);
      for (double& c : p) c = unit(rng);
      bool ok = true;
      for (const auto& q : pts) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim; ++a) s += (p[a] - q[a]) * (p[a] - q[a]);
        if (std::sqrt(s) < min_separation) {
          ok = false;
          break;
        }
      }
      if (ok) pts.push_back(std::move(p));
    }
    DistanceMatrix d(n);
    double max_seen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim; ++a) s += (pts[i][a] - pts[j][a]) * (pts[i][a] - pts[j][a]);
        const double v = std::sqrt(s);
        d.set_symmetric(i, j, v);
        max_seen = std::max(max_seen, v);
      }
    }
    DistanceMatrix scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        scaled.set_symmetric(i, j, d(i, j) / max_seen * max_distance);
      }
    }
    return MetricMeasureSpace(std::move(scaled), weights_for(cfg, n), {}, std::move(pts));
  }
  if (source == "riemannian_grid") {
    const GridSpec spec = grid_spec_from_config(cfg, "a riemannian grid space");
    const json& tensor_cfg = require_key(cfg, "tensor", "a riemannian grid space");
    const double eps = tensor_cfg.value("epsilon", 1.0);
    return grid_space(spec, tensor_from_config(tensor_cfg), eps, threads);
  }
  throw ConfigError("unknown space source '" + source + "'");
}

MonotoneDistanceFamily build_family(const json& family_cfg, const json* space_cfg,
                                    std::uint64_t seed, int threads, const fs::path& config_dir) {
  const std::string kind = require_key(family_cfg, "kind", "a family spec").get<std::string>();
  if (kind == "snowflake") {
    if (space_cfg == nullptr) {
      throw ConfigError("missing key 'space' (required for a snowflake family)");
    }
    const MetricMeasureSpace base = build_space(*space_cfg, seed, threads, config_dir);
    std::vector<double> alphas;
    for (const auto& a : require_key(family_cfg, "alphas", "a snowflake family")) {
      alphas.push_back(a.get<double>());
    }
    return make_snowflake_family(base, std::move(alphas));
  }
  if (kind == "riemannian") {
    const GridSpec spec = grid_spec_from_config(family_cfg, "a riemannian family");
    std::vector<double> epsilons;
    for (const auto& e : require_key(family_cfg, "epsilons", "a riemannian family")) {
      epsilons.push_back(e.get<double>());
    }
    return riemannian_grid_family(spec, tensor_from_config(require_key(family_cfg, "tensor",
                                                                       "a riemannian family")),
                                  epsilons, nullptr, threads);
  }
  if (kind == "csv_levels") {
    if (space_cfg == nullptr) {
      throw ConfigError("missing key 'space' (required for csv family levels)");
    }
    const MetricMeasureSpace base = build_space(*space_cfg, seed, threads, config_dir);
    std::vector<DistanceMatrix> levels;
    for (const auto& p : require_key(family_cfg, "levels", "a csv family")) {
      const auto rows = read_matrix_csv(resolve_path(p.get<std::string>(), config_dir));
      const MetricValidation verdict = validate_metric(rows);
      if (!verdict.ok()) {
        throw DomainError("family level file " + p.get<std::string>() + " is not a metric: " +
                          verdict.violations.front().describe());
      }
      levels.push_back(DistanceMatrix::from_validated_rows(rows));
    }
    MetricMeasureSpace base_with_limit =
        family_cfg.contains("limit")
            ? base
            : base.with_distance(levels.back());
    if (family_cfg.contains("limit")) {
      const auto rows = read_matrix_csv(
          resolve_path(family_cfg.at("limit").get<std::string>(), config_dir));
      base_with_limit = base.with_distance(DistanceMatrix::from_validated_rows(rows));
    }
    return MonotoneDistanceFamily(std::move(base_with_limit), std::move(levels));
  }
  throw ConfigError("unknown family kind '" + kind + "'");
}

ScalarField build_field(const json& cfg, const MetricMeasureSpace& space) {
  const std::string kind = cfg.value("kind", "distance_to");
  if (kind == "distance_to") {
    const std::size_t anchor = cfg.value("point", std::size_t{0});
    if (anchor >= space.size()) throw ConfigError("field anchor point out of range");
    const double clamp = cfg.value("clamp", 0.0);
    std::vector<double> v(space.size());
    for (std::size_t x = 0; x < space.size(); ++x) {
      v[x] = space.dist(anchor, x);
      if (clamp > 0.0) v[x] = std::min(v[x], clamp);
    }
    return ScalarField(std::move(v));
  }
  if (kind == "coordinate") {
    const std::size_t axis = cfg.value("axis", std::size_t{0});
    if (space.coords().empty()) throw ConfigError("coordinate field needs a space with coordinates");
    std::vector<double> v(space.size());
    for (std::size_t x = 0; x < space.size(); ++x) {
      if (axis >= space.coords()[x].size()) throw ConfigError("coordinate axis out of range");
      v[x] = space.coords()[x][axis];
    }
    return ScalarField(std::move(v));
  }
  if (kind == "ones") {
    return ScalarField(std::vector<double>(space.size(), 1.0));
  }
  if (kind == "csv") {
    throw ConfigError("csv fields must be resolved by the caller");  // handled in build_field_at
  }
  throw ConfigError("unknown field kind '" + kind + "'");
}

ScalarField build_field_at(const json& cfg, const MetricMeasureSpace& space,
                           const fs::path& config_dir) {
  if (cfg.value("kind", "distance_to") == "csv") {
    const auto values = read_column_csv(
        resolve_path(require_key(cfg, "path", "a csv field").get<std::string>(), config_dir));
    if (values.size() != space.size()) {
      throw ConfigError("field file length does not match the point count");
    }
    return ScalarField(values);
  }
  return build_field(cfg, space);
}

EnergyConfig energy_from_config(const json& root, const DistanceMatrix& d) {
  EnergyConfig cfg;
  if (root.contains("energy")) {
    const json& e = root.at("energy");
    cfg.p = e.value("p", 2.0);
    cfg.scale = e.contains("scale") ? e.at("scale").get<double>() : default_slope_scale(d);
    cfg.kind = ball_kind_from_string(e.value("ball", std::string("open")));
    cfg.backend = energy_backend_from_string(e.value("backend", std::string("slope")));
  } else {
    cfg.scale = default_slope_scale(d);
  }
  cfg.validate();
  return cfg;
}

json violation_to_json(const MetricViolation& v) {
  json out;
  out["description"] = v.describe();
  switch (v.kind) {
    case MetricViolation::Kind::Asymmetry: out["kind"] = "asymmetry"; break;
    case MetricViolation::Kind::NonzeroDiagonal: out["kind"] = "nonzero-diagonal"; break;
    case MetricViolation::Kind::NonpositiveOffdiag: out["kind"] = "nonpositive-offdiagonal"; break;
    case MetricViolation::Kind::Triangle: out["kind"] = "triangle"; break;
  }
  return out;
}

json approx_report_to_json(const ApproxReport& r) {
  json out;
  out["level"] = r.level;
  out["p"] = r.p;
  out["scale"] = r.scale;
  out["eps_target"] = r.eps_target;
  out["eps_prime_final"] = r.eps_prime_final;
  out["lp_gap"] = r.lp_gap;
  out["slope_integral_f"] = r.slope_integral_f;
  out["slope_integral_g"] = r.slope_integral_g;
  out["energy_excess"] = r.energy_excess;
  out["constants"] = {{"lip_f", r.lip_f}, {"C", r.constant_C}};
  out["retries"] = r.retries;
  out["lp_ok"] = r.lp_ok;
  out["slope_ok"] = r.slope_ok;
  out["success"] = r.success;
  out["trivial_path"] = r.trivial_path;
  out["steps"] = {{"egorov_radius", r.steps.egorov_radius},
                  {"bad_mass", r.steps.bad_mass},
                  {"ambient_size", r.steps.ambient_size},
                  {"good_set_size", r.steps.good_set_size},
                  {"partition_size", r.steps.partition_size},
                  {"extension_constant", r.steps.extension_constant},
                  {"slope_deviation", r.steps.slope_deviation},
                  {"level_threshold", r.steps.level_threshold},
                  {"threshold_met", r.steps.threshold_met},
                  {"level_unconstrained", r.steps.level_unconstrained},
                  {"patch_lip_on_K", r.steps.patch_lip_on_K},
                  {"patch_lip_bound", r.steps.patch_lip_bound},
                  {"patch_bound_ok", r.steps.patch_bound_ok},
                  {"patch_gap_on_K", r.steps.patch_gap_on_K},
                  {"cutoff_empty_core", r.steps.cutoff_empty_core}};
  return out;
}

struct ExperimentOutput {
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
  std::vector<std::string> sweep_rows;                     // "scale,level,p,backend,value"
};

class StageTimer {
public:
  explicit StageTimer(std::map<std::string, std::int64_t>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& stage, F&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(stage, start);
    } else {
      auto result = fn();
      record(stage, start);
      return result;
    }
  }

private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    const auto end = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
  }
  std::map<std::string, std::int64_t>& sink_;
};

ExperimentOutput run_validate(const json& cfg, std::uint64_t seed, int threads,
                              const fs::path& config_dir) {
  ExperimentOutput out;
  json verdict;
  if (cfg.contains("space")) {
    const json& space_cfg = cfg.at("space");
    if (space_cfg.value("source", "") == "csv") {
      const auto rows = read_matrix_csv(resolve_path(
          require_key(space_cfg, "dist", "a csv space").get<std::string>(), config_dir));
      const MetricValidation v = validate_metric(rows);
      verdict["space"]["ok"] = v.ok();
      verdict["space"]["violations"] = json::array();
      for (const auto& viol : v.violations) {
        verdict["space"]["violations"].push_back(violation_to_json(viol));
      }
    } else {
      const MetricMeasureSpace space = build_space(space_cfg, seed, threads, config_dir);
      const MetricValidation v = validate_metric(space.dist());
      verdict["space"]["ok"] = v.ok();
      verdict["space"]["violations"] = json::array();
    }
  }
  if (cfg.contains("family")) {
    const json* space_cfg = cfg.contains("space") ? &cfg.at("space") : nullptr;
    const MonotoneDistanceFamily family =
        build_family(cfg.at("family"), space_cfg, seed, threads, config_dir);
    json levels = json::array();
    for (std::size_t i = 0; i < family.level_count(); ++i) {
      const MetricValidation v = validate_metric(family.level(i));
      levels.push_back({{"level", i}, {"ok", v.ok()}});
    }
    verdict["family"] = {{"levels", levels}, {"monotone", true}};
  }
  if (!cfg.contains("space") && !cfg.contains("family")) {
    throw ConfigError("missing key 'space' (required for the validate experiment)");
  }
  out.files.emplace_back("validation.json", verdict.dump(2) + "\n");
  return out;
}

ExperimentOutput run_energy(const json& cfg, std::uint64_t seed, int threads,
                            const fs::path& config_dir) {
  const MetricMeasureSpace space =
      build_space(require_key(cfg, "space", "the energy experiment"), seed, threads, config_dir);
  const EnergyConfig energy_cfg = energy_from_config(cfg, space.dist());
  const ScalarField f =
      build_field_at(cfg.value("field", json({{"kind", "distance_to"}})), space, config_dir);

  const EnergyReport asymptotic = asymptotic_energy(f, space, energy_cfg);
  const EnergyReport cheeger = cheeger_energy(f, space, energy_cfg);
  const double norm = sobolev_norm(f, space, energy_cfg);

  json report;
  report["p"] = energy_cfg.p;
  report["scale"] = energy_cfg.scale;
  report["ball"] = to_string(energy_cfg.kind);
  report["backend"] = to_string(energy_cfg.backend);
  report["asymptotic_energy"] = asymptotic.value;
  report["cheeger_energy"] = cheeger.value;
  report["envelope_trivial"] = cheeger.envelope_trivial;
  report["sobolev_norm"] = norm;

  ExperimentOutput out;
  out.files.emplace_back("energy.json", report.dump(2) + "\n");
  std::ostringstream csv;
  csv << "scale,level,p,backend,value\n";
  const std::string row = format_double(energy_cfg.scale) + ",limit," +
                          format_double(energy_cfg.p) + "," + to_string(energy_cfg.backend) + "," +
                          format_double(cheeger.value);
  csv << row << "\n";
  out.files.emplace_back("energy.csv", csv.str());
  out.sweep_rows.push_back(row);
  return out;
}

ExperimentOutput run_approx(const json& cfg, std::uint64_t seed, int threads,
                            const fs::path& config_dir) {
  const json* space_cfg = cfg.contains("space") ? &cfg.at("space") : nullptr;
  const MonotoneDistanceFamily family = build_family(
      require_key(cfg, "family", "the approx experiment"), space_cfg, seed, threads, config_dir);
  const EnergyConfig energy_cfg = energy_from_config(cfg, family.limit());
  const ScalarField f = build_field_at(cfg.value("field", json({{"kind", "distance_to"}})),
                                       family.base(), config_dir);
  const double eps = cfg.contains("approx") ? cfg.at("approx").value("eps", 0.05) : 0.05;

  const SlopeControlResult result =
      approx_with_slope_control(f, eps, family, energy_cfg.p, energy_cfg.scale, energy_cfg.kind);

  ExperimentOutput out;
  out.files.emplace_back("approx_report.json", approx_report_to_json(result.report).dump(2) + "\n");
  std::ostringstream csv;
  csv << "level,lp_gap,energy_excess,lip_f,C,eps_prime,bad_mass,partition_size,"
         "extension_constant,slope_deviation,retries,success\n";
  const ApproxReport& r = result.report;
  csv << r.level << ',' << format_double(r.lp_gap) << ',' << format_double(r.energy_excess) << ','
      << format_double(r.lip_f) << ',' << format_double(r.constant_C) << ','
      << format_double(r.eps_prime_final) << ',' << format_double(r.steps.bad_mass) << ','
      << r.steps.partition_size << ',' << format_double(r.steps.extension_constant) << ','
      << format_double(r.steps.slope_deviation) << ',' << r.retries << ','
      << (r.success ? 1 : 0) << "\n";
  out.files.emplace_back("approx_summary.csv", csv.str());
  return out;
}

ExperimentOutput run_mosco_liminf(const json& cfg, std::uint64_t seed, int threads,
                                  const fs::path& config_dir) {
  const json* space_cfg = cfg.contains("space") ? &cfg.at("space") : nullptr;
  const MonotoneDistanceFamily family =
      build_family(require_key(cfg, "family", "the mosco-liminf experiment"), space_cfg, seed,
                   threads, config_dir);
  const EnergyConfig energy_cfg = energy_from_config(cfg, family.limit());
  const ScalarField f = build_field_at(cfg.value("field", json({{"kind", "distance_to"}})),
                                       family.base(), config_dir);

  const json liminf_cfg = cfg.value("liminf", json::object());
  const std::size_t terms = std::min<std::size_t>(
      liminf_cfg.value("terms", family.level_count()), family.level_count());
  const std::size_t bump_point = liminf_cfg.value("bump_point", std::size_t{0});
  if (bump_point >= family.point_count()) throw ConfigError("liminf bump point out of range");

  FunctionSequence seq;
  seq.limit = f;
  for (std::size_t i = 1; i <= terms; ++i) {
    std::vector<double> v(f.values());
    v[bump_point] += 1.0 / static_cast<double>(i);
    seq.terms.emplace_back(std::move(v));
  }
  const LiminfReport report = gamma_liminf_check(family, seq, energy_cfg);

  json j;
  j["energy_limit_f"] = report.energy_limit_f;
  j["liminf_margin"] = report.liminf_margin;
  j["kappa"] = report.kappa;
  j["kernel_ok"] = report.kernel_ok;
  j["liminf_ok"] = report.liminf_ok;

  ExperimentOutput out;
  out.files.emplace_back("mosco_liminf.json", j.dump(2) + "\n");
  std::ostringstream csv;
  csv << "index,energy_level,energy_limit_fi,lp_gap\n";
  for (std::size_t i = 0; i < report.energy_level.size(); ++i) {
    csv << i << ',' << format_double(report.energy_level[i]) << ','
        << format_double(report.energy_limit_fi[i]) << ',' << format_double(report.lp_gaps[i])
        << "\n";
  }
  out.files.emplace_back("mosco_liminf.csv", csv.str());
  return out;
}

ExperimentOutput run_mosco_recovery(const json& cfg, std::uint64_t seed, int threads,
                                    const fs::path& config_dir) {
  const json* space_cfg = cfg.contains("space") ? &cfg.at("space") : nullptr;
  const MonotoneDistanceFamily family =
      build_family(require_key(cfg, "family", "the mosco-recovery experiment"), space_cfg, seed,
                   threads, config_dir);
  const EnergyConfig energy_cfg = energy_from_config(cfg, family.limit());
  const ScalarField f = build_field_at(cfg.value("field", json({{"kind", "distance_to"}})),
                                       family.base(), config_dir);
  const std::size_t schedule =
      cfg.contains("recovery") ? cfg.at("recovery").value("schedule", std::size_t{4})
                               : std::size_t{4};

  const auto [seq, limsup] = recovery_sequence(f, family, energy_cfg, schedule);

  json j;
  j["blocks"] = json::array();
  for (const auto& b : seq.blocks) {
    j["blocks"].push_back({{"n", b.n},
                           {"level", b.level},
                           {"eps", b.eps},
                           {"lp_gap", b.lp_gap},
                           {"energy", b.energy},
                           {"pipeline", approx_report_to_json(b.report)}});
  }
  j["truncated"] = seq.truncated;
  j["energy_limit_f"] = limsup.energy_limit_f;
  j["limsup_margin"] = limsup.limsup_margin;
  j["schedule_tail"] = limsup.schedule_tail;
  j["deviation"] = limsup.deviation;
  j["chain_ok"] = limsup.chain_ok;
  j["limsup_ok"] = limsup.limsup_ok;

  ExperimentOutput out;
  out.files.emplace_back("mosco_recovery.json", j.dump(2) + "\n");
  std::ostringstream csv;
  csv << "level,block_n,eps,energy,block_bound,margin\n";
  for (std::size_t offset = 0; offset < seq.assembled_block.size(); ++offset) {
    const std::size_t level = seq.first_level + offset;
    const auto& block = seq.blocks[seq.assembled_block[offset]];
    csv << level << ',' << block.n << ',' << format_double(block.eps) << ','
        << format_double(limsup.energy_per_level[offset]) << ','
        << format_double(limsup.block_bound_per_level[offset]) << ','
        << format_double(limsup.block_bound_per_level[offset] - limsup.energy_per_level[offset])
        << "\n";
  }
  out.files.emplace_back("mosco_recovery.csv", csv.str());
  return out;
}

ExperimentOutput run_hilbertianity(const json& cfg, std::uint64_t seed, int threads,
                                   const fs::path& config_dir) {
  const json* space_cfg = cfg.contains("space") ? &cfg.at("space") : nullptr;
  const MonotoneDistanceFamily family =
      build_family(require_key(cfg, "family", "the hilbertianity experiment"), space_cfg, seed,
                   threads, config_dir);
  EnergyConfig energy_cfg = energy_from_config(cfg, family.limit());
  const std::size_t trials =
      cfg.contains("hilbertianity") ? cfg.at("hilbertianity").value("trials", std::size_t{100})
                                    : std::size_t{100};

  const HilbertianityStability result =
      hilbertianity_stability_experiment(family, energy_cfg, trials, seed);

  json j;
  j["backend"] = to_string(energy_cfg.backend);
  j["trials"] = trials;
  j["all_hilbertian"] = result.all_hilbertian;
  j["limit"] = {{"max_relative_defect", result.limit.max_relative_defect},
                {"hilbertian", result.limit.hilbertian}};
  j["levels"] = json::array();
  for (std::size_t i = 0; i < result.per_level.size(); ++i) {
    j["levels"].push_back({{"level", i},
                           {"max_relative_defect", result.per_level[i].max_relative_defect},
                           {"hilbertian", result.per_level[i].hilbertian}});
  }

  ExperimentOutput out;
  out.files.emplace_back("hilbertianity.json", j.dump(2) + "\n");
  std::ostringstream csv;
  csv << "level,max_relative_defect,hilbertian\n";
  for (std::size_t i = 0; i < result.per_level.size(); ++i) {
    csv << i << ',' << format_double(result.per_level[i].max_relative_defect) << ','
        << (result.per_level[i].hilbertian ? 1 : 0) << "\n";
  }
  csv << "limit," << format_double(result.limit.max_relative_defect) << ','
      << (result.limit.hilbertian ? 1 : 0) << "\n";
  out.files.emplace_back("hilbertianity.csv", csv.str());
  return out;
}

ExperimentOutput run_snowflake(const json& cfg, std::uint64_t seed, int threads,
                               const fs::path& config_dir) {
  const MetricMeasureSpace space = build_space(
      require_key(cfg, "space", "the snowflake experiment"), seed, threads, config_dir);
  const EnergyConfig energy_cfg = energy_from_config(cfg, space.dist());
  const ScalarField f =
      build_field_at(cfg.value("field", json({{"kind", "coordinate"}})), space, config_dir);

  const json& snow = require_key(cfg, "snowflake", "the snowflake experiment");
  std::vector<std::size_t> levels;
  for (const auto& l : require_key(snow, "levels", "the snowflake experiment")) {
    levels.push_back(l.get<std::size_t>());
  }
  std::vector<double> radii;
  for (const auto& r : require_key(snow, "radii", "the snowflake experiment")) {
    radii.push_back(r.get<double>());
  }

  const SnowflakeTable table = snowflake_counterexample(
      space, f, energy_cfg.p, radii, levels, energy_cfg.kind);

  ExperimentOutput out;
  std::ostringstream csv;
  csv << "level,radius,energy,bound,margin\n";
  for (const auto& row : table.rows) {
    csv << row.level << ',' << format_double(row.radius) << ',' << format_double(row.energy) << ','
        << format_double(row.bound) << ',' << format_double(row.margin) << "\n";
  }
  out.files.emplace_back("snowflake.csv", csv.str());

  json j;
  j["lip_f"] = table.lip_f;
  j["pointwise_ok"] = table.pointwise_ok;
  j["fits"] = json::array();
  for (const auto& fit : table.fits) {
    j["fits"].push_back({{"level", fit.level},
                         {"fitted_exponent", fit.fitted_exponent},
                         {"predicted_exponent", fit.predicted_exponent},
                         {"points_used", fit.points_used}});
  }
  j["base_energy"] = json::array();
  for (std::size_t k = 0; k < table.radii.size(); ++k) {
    j["base_energy"].push_back({{"radius", table.radii[k]}, {"energy", table.base_energy[k]}});
  }
  out.files.emplace_back("snowflake.json", j.dump(2) + "\n");
  return out;
}

ExperimentOutput dispatch_experiment(const std::string& experiment, const json& cfg,
                                     std::uint64_t seed, int threads,
                                     const fs::path& config_dir) {
  if (experiment == "validate") return run_validate(cfg, seed, threads, config_dir);
  if (experiment == "energy") return run_energy(cfg, seed, threads, config_dir);
  if (experiment == "approx") return run_approx(cfg, seed, threads, config_dir);
  if (experiment == "mosco-liminf") return run_mosco_liminf(cfg, seed, threads, config_dir);
  if (experiment == "mosco-recovery") return run_mosco_recovery(cfg, seed, threads, config_dir);
  if (experiment == "hilbertianity") return run_hilbertianity(cfg, seed, threads, config_dir);
  if (experiment == "snowflake") return run_snowflake(cfg, seed, threads, config_dir);
  throw ConfigError("unknown experiment '" + experiment + "'");
}

struct ResolvedRun {
  json config;
  fs::path config_dir;
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out_dir;
};

ResolvedRun resolve(const std::string& config_path, const RunOptions& options) {
  ResolvedRun run;
  run.config = parse_config_file(config_path);
  run.config_dir = fs::path(config_path).parent_path();
  run.experiment = !options.experiment.empty()
                       ? options.experiment
                       : require_key(run.config, "experiment", "a scenario").get<std::string>();
  run.seed = options.seed.has_value() ? *options.seed
                                      : run.config.value("seed", std::uint64_t{0});
  run.threads = resolve_threads(options.threads);
  const std::string out =
      !options.out_dir.empty() ? options.out_dir : run.config.value("out", std::string("results"));
  run.out_dir = fs::path(out);
  return run;
}

void write_outputs(const fs::path& out_dir, const ExperimentOutput& output,
                   RunManifest& manifest) {
  for (const auto& [name, content] : output.files) {
    write_text_atomic((out_dir / name).string(), content);
    manifest.outputs.push_back(name);
  }
}

}  // namespace

json RunManifest::to_json() const {
  json j;
  j["artifact"] = artifact;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["threads"] = threads;
  j["outputs"] = outputs;
  j["timings_ms"] = timings_ms;
  j["config"] = config_echo;
  return j;
}

RunManifest run_scenario(const std::string& config_path, const RunOptions& options) {
  const ResolvedRun run = resolve(config_path, options);
  RunManifest manifest;
  manifest.experiment = run.experiment;
  manifest.seed = run.seed;
  manifest.threads = run.threads;
  manifest.out_dir = run.out_dir.string();
  manifest.config_echo = run.config;

  StageTimer timer(manifest.timings_ms);
  const ExperimentOutput output = timer.time("experiment", [&] {
    return dispatch_experiment(run.experiment, run.config, run.seed, run.threads, run.config_dir);
  });
  timer.time("write", [&] { write_outputs(run.out_dir, output, manifest); });
  write_text_atomic((run.out_dir / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
  log_info("experiment '" + run.experiment + "' wrote " +
           std::to_string(manifest.outputs.size()) + " file(s) to " + run.out_dir.string());
  return manifest;
}

RunManifest run_sweep(const std::string& config_path, const RunOptions& options) {
  const ResolvedRun run = resolve(config_path, options);
  if (!run.config.contains("sweep")) {
    throw ConfigError("missing key 'sweep' (required for the sweep command)");
  }
  const json& grid = run.config.at("sweep");
  if (!grid.is_object() || grid.empty()) throw ConfigError("sweep grid must be a nonempty object");

  std::vector<std::string> axis_names;
  std::vector<std::vector<json>> axis_values;
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw ConfigError("sweep axis '" + key + "' must be a nonempty array");
    }
    axis_names.push_back(key);
    axis_values.push_back(std::vector<json>(values.begin(), values.end()));
  }

  std::size_t combos = 1;
  for (const auto& axis : axis_values) combos *= axis.size();

  RunManifest manifest;
  manifest.experiment = run.experiment + " (sweep)";
  manifest.seed = run.seed;
  manifest.threads = run.threads;
  manifest.out_dir = run.out_dir.string();
  manifest.config_echo = run.config;
  StageTimer timer(manifest.timings_ms);

  std::vector<std::string> sweep_rows;
  timer.time("sweep", [&] {
    for (std::size_t combo = 0; combo < combos; ++combo) {
      json cfg = run.config;
      cfg.erase("sweep");
      std::size_t rest = combo;
      for (std::size_t a = axis_names.size(); a-- > 0;) {
        const std::size_t pick = rest % axis_values[a].size();
        rest /= axis_values[a].size();
        // Axes address the energy section (p, scale, ...) by key.
        cfg["energy"][axis_names[a]] = axis_values[a][pick];
      }
      char combo_name[32];
      std::snprintf(combo_name, sizeof(combo_name), "combo_%03zu", combo);
      const fs::path combo_dir = run.out_dir / combo_name;
      const ExperimentOutput output =
          dispatch_experiment(run.experiment, cfg, run.seed, run.threads, run.config_dir);
      for (const auto& [name, content] : output.files) {
        write_text_atomic((combo_dir / name).string(), content);
        manifest.outputs.push_back(std::string(combo_name) + "/" + name);
      }
      for (const auto& row : output.sweep_rows) sweep_rows.push_back(row);
    }
  });

  std::ostringstream csv;
  csv << "scale,level,p,backend,value\n";
  for (const auto& row : sweep_rows) csv << row << "\n";
  write_text_atomic((run.out_dir / "sweep.csv").string(), csv.str());
  manifest.outputs.push_back("sweep.csv");

  write_text_atomic((run.out_dir / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace moscolab
