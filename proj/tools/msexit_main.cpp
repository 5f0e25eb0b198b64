// Command-line driver: loads a JSON run config, executes the matching
// pipeline, and writes report.json / model.json / samples.csv into --out.
//
// Exit codes: 0 all checks pass, 2 config error, 3 solver failure,
// 4 invariant violation (includes failed deterministic checks),
// 5 statistical-tolerance failure.

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "msexit/common.hpp"
#include "msexit/config.hpp"
#include "msexit/harness.hpp"
#include "msexit/report.hpp"

namespace {

namespace fs = std::filesystem;

struct Invocation {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

void add_common_options(CLI::App* cmd, Invocation* inv) {
  cmd->add_option("--config", inv->config_path, "JSON run configuration")->required();
  cmd->add_option("--out", inv->out_dir, "output directory (created if missing)");
  cmd->add_option("--seed", inv->seed_override, "override the master seed");
  cmd->add_flag("--quiet", inv->quiet, "suppress PASS/FAIL lines on stdout");
}

// --seed beats MSEXIT_SEED beats the seed in the config file.
std::optional<std::uint64_t> resolve_seed_override(const Invocation& inv) {
  if (inv.seed_override) return inv.seed_override;
  const char* raw = std::getenv("MSEXIT_SEED");
  if (!raw || !*raw) return std::nullopt;
  if (raw[0] == '-') throw msexit::ConfigError(std::string("MSEXIT_SEED must be nonnegative: ") + raw);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (errno != 0 || end == raw || *end != '\0')
    throw msexit::ConfigError(std::string("MSEXIT_SEED is not an unsigned integer: ") + raw);
  return static_cast<std::uint64_t>(v);
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& doc) {
  msexit::write_text_file(path.string(), doc.dump(2) + "\n");
}

int run_experiment(const std::string& subcommand, msexit::ExperimentKind expected,
                   const Invocation& inv) {
  msexit::ExperimentConfig cfg = msexit::load_experiment_config(inv.config_path);
  if (cfg.kind != expected)
    throw msexit::ConfigError("config kind \"" + std::string(msexit::kind_name(cfg.kind)) +
                              "\" does not match subcommand \"" + subcommand + "\"");
  if (auto seed = resolve_seed_override(inv)) cfg.master_seed = *seed;

  const msexit::EnsembleReport report = msexit::run_ensemble(cfg);

  const fs::path out(inv.out_dir);
  fs::create_directories(out);
  write_json_file(out / "report.json", msexit::report_to_json(report));
  if (expected == msexit::ExperimentKind::homogenize_only && !report.models.empty())
    write_json_file(out / "model.json", msexit::model_to_json(report.models.front()));
  if (cfg.want_samples_csv) {
    const std::string csv = msexit::render_samples_csv(report);
    if (!csv.empty()) msexit::write_text_file((out / "samples.csv").string(), csv);
  }

  if (!inv.quiet) std::cout << msexit::render_pass_fail_lines(report);
  if (report.all_pass) return 0;
  return expected == msexit::ExperimentKind::homogenize_only ? 4 : 5;
}

int run_scale_speed_command(const Invocation& inv) {
  const msexit::ScaleSpeedConfig cfg = msexit::load_scale_speed_config(inv.config_path);
  const msexit::ScaleSpeedReport report = msexit::run_scale_speed(cfg);

  const fs::path out(inv.out_dir);
  fs::create_directories(out);
  write_json_file(out / "report.json", msexit::report_to_json(report));
  msexit::write_text_file((out / "samples.csv").string(), msexit::render_samples_csv(report));

  if (!inv.quiet) std::cout << msexit::render_pass_fail_lines(report);
  return report.all_pass ? 0 : 4;
}

// Best effort: leave a machine-readable trace of the failure next to where
// the report would have gone, then surface the message.
int report_failure(const Invocation& inv, int code, const char* type, const std::string& message) {
  try {
    fs::create_directories(inv.out_dir);
    nlohmann::ordered_json doc;
    doc["error"] = {{"type", type}, {"message", message}};
    write_json_file(fs::path(inv.out_dir) / "report.json", doc);
  } catch (const std::exception&) {
  }
  if (!inv.quiet) std::cout << "FAIL error type=" << type << "\n";
  std::cerr << "error (" << type << "): " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"effective dynamics, fluctuation limits, and exit laws for multiscale diffusions"};
  app.require_subcommand(1);

  Invocation inv;
  CLI::App* homogenize = app.add_subcommand("homogenize", "solve the cell problems and tabulate the effective model");
  CLI::App* fluctuations = app.add_subcommand("fluctuations", "compare simulated fluctuations against the limiting Gaussian law");
  CLI::App* exit_law = app.add_subcommand("exit-law", "compare simulated exits against the predicted exit-time law");
  CLI::App* rough = app.add_subcommand("rough-potential", "conditioned rare-exit law in a rough potential");
  CLI::App* scale_speed = app.add_subcommand("scale-speed", "convergence sweep of the scale/speed functions");
  for (CLI::App* cmd : {homogenize, fluctuations, exit_law, rough, scale_speed})
    add_common_options(cmd, &inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (homogenize->parsed())
      return run_experiment("homogenize", msexit::ExperimentKind::homogenize_only, inv);
    if (fluctuations->parsed())
      return run_experiment("fluctuations", msexit::ExperimentKind::fluctuation, inv);
    if (exit_law->parsed())
      return run_experiment("exit-law", msexit::ExperimentKind::exit_law, inv);
    if (rough->parsed())
      return run_experiment("rough-potential", msexit::ExperimentKind::conditional_exit, inv);
    return run_scale_speed_command(inv);
  } catch (const msexit::ConfigError& e) {
    return report_failure(inv, 2, "config", e.what());
  } catch (const msexit::SolverError& e) {
    return report_failure(inv, 3, "solver", e.what());
  } catch (const msexit::InvariantError& e) {
    return report_failure(inv, 4, "invariant", e.what());
  } catch (const msexit::StatError& e) {
    return report_failure(inv, 5, "statistical", e.what());
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
