#include <cstdint>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "moscolab/csv_io.hpp"
#include "moscolab/errors.hpp"
#include "moscolab/logging.hpp"
#include "moscolab/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitIo = 4;

void write_failure_record(const std::string& out_dir, const std::string& kind,
                          const std::string& message, double margin, const std::string& module) {
  if (out_dir.empty()) return;
  try {
    nlohmann::json failure;
    failure["error"] = kind;
    failure["message"] = message;
    if (!module.empty()) failure["module"] = module;
    if (margin != 0.0) failure["margin"] = margin;
    moscolab::write_text_atomic(out_dir + "/failure.json", failure.dump(2) + "\n");
  } catch (const std::exception&) {
    // Nothing else to do; the exit code still reports the failure.
  }
}

}  // namespace

int main(int argc, char** argv) {
  moscolab::set_log_level(moscolab::log_level_from_env());

  CLI::App app{"mosco-lab: energies, approximants and convergence checks on finite metric"
               " measure spaces"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string experiment;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config file (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    cmd->add_option("--seed", seed, "RNG seed (overrides the config)")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", threads, "worker threads, 0 = auto");
    cmd->add_option("--experiment", experiment, "experiment name (overrides the config)");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment from a config");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run the config's parameter grid");
  add_common(cmd_run);
  add_common(cmd_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  moscolab::RunOptions options;
  options.out_dir = out_dir;
  if (seed_set) options.seed = seed;
  options.threads = threads;
  options.experiment = experiment;

  const std::string failure_dir = !out_dir.empty() ? out_dir : std::string("results");
  try {
    if (cmd_run->parsed()) {
      moscolab::run_scenario(config_path, options);
    } else {
      moscolab::run_sweep(config_path, options);
    }
    return kExitOk;
  } catch (const moscolab::ConfigError& e) {
    moscolab::log_error(e.what());
    write_failure_record(failure_dir, "config", e.what(), 0.0, "");
    return kExitConfig;
  } catch (const moscolab::InvariantError& e) {
    moscolab::log_error(e.what());
    write_failure_record(failure_dir, "invariant", e.what(), e.margin(), e.module());
    return kExitInvariant;
  } catch (const moscolab::IoError& e) {
    moscolab::log_error(e.what());
    write_failure_record(failure_dir, "io", e.what(), 0.0, "");
    return kExitIo;
  } catch (const std::exception& e) {
    moscolab::log_error(e.what());
    write_failure_record(failure_dir, "internal", e.what(), 0.0, "");
    return kExitInvariant;
  }
}
