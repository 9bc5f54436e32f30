// Command-line front end for the experiment pipeline.
//
// Exit codes: 0 all stage checks pass, 1 bad config or usage, 2 missing
// upstream artifact, 3 failed invariant (the message names the check),
// 4 solver or I/O failure.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hshg/pipeline.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_dir, long long seed_override,
        const std::string& stage) {
  hshg::ExperimentConfig cfg = hshg::load_config(config_path);
  if (seed_override >= 0)
    cfg.field.seeds = {static_cast<std::uint64_t>(seed_override)};

  if (stage == "all") {
    const nlohmann::json summary = hshg::run_pipeline(cfg, out_dir, std::cout);
    if (!summary["all_pass"].get<bool>()) {
      std::cerr << "error: check failed: "
                << hshg::first_failing_check(hshg::load_run_record(
                       hshg::ensure_run_dir(cfg, out_dir)))
                << "\n";
      return 3;
    }
    return 0;
  }
  if (stage == "gen-field") {
    hshg::cmd_gen_field(cfg, out_dir);
    return 0;
  }
  if (stage == "cell-problem") {
    hshg::cmd_cell_problem(cfg, out_dir);
    return 0;
  }
  if (stage == "adapt") {
    hshg::cmd_adapt(cfg, out_dir);
    return 0;
  }
  if (stage == "regularity") {
    hshg::cmd_regularity(cfg, out_dir);
    return 0;
  }
  if (stage == "report") {
    const std::string dir = hshg::ensure_run_dir(cfg, out_dir);
    const nlohmann::json summary = hshg::cmd_report(dir, std::cout);
    if (!summary["all_pass"].get<bool>()) {
      std::cerr << "error: check failed: "
                << hshg::first_failing_check(hshg::load_run_record(dir)) << "\n";
      return 3;
    }
    return 0;
  }
  throw hshg::ConfigError("unknown --stage \"" + stage +
                          "\" (gen-field, cell-problem, adapt, regularity, report, all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hshg: seeded corrector and regularity experiments"};
  std::string config_path, out_dir, stage = "all";
  long long seed_override = -1;
  int workers = 0;
  app.add_option("--config", config_path, "experiment config JSON")->required();
  app.add_option("--out", out_dir, "run directory (default: config's output, else runs/<name>)");
  app.add_option("--seed-override", seed_override, "replace the config's seed list with one seed");
  app.add_option("--workers", workers, "worker threads (default: hardware)");
  app.add_option("--stage", stage, "gen-field | cell-problem | adapt | regularity | report | all");
  app.footer("Set HSHG_LOG=info or HSHG_LOG=debug for progress output on stderr.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (workers > 0) hshg::set_workers(workers);

  try {
    return run(config_path, out_dir, seed_override, stage);
  } catch (const hshg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const hshg::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hshg::InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
