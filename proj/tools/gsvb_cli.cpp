#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsvb/gsvb.h"

namespace {

enum Exit { kOk = 0, kCellsFailed = 1, kUsage = 2, kError = 3 };

int report(gsvb_status status, const char* action) {
  std::fprintf(stderr, "gsvb: %s failed: %s: %s\n", action, gsvb_status_string(status),
               gsvb_last_error());
  return status == GSVB_ERR_CONFIG || status == GSVB_ERR_INVALID_ARGUMENT ? kUsage : kError;
}

int run_command(const std::string& config, const std::string& output,
                const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  gsvb_experiment* exp = nullptr;
  if (auto s = gsvb_experiment_load(config.c_str(), &exp); s != GSVB_OK)
    return report(s, "loading config");
  struct Guard {
    gsvb_experiment* e;
    ~Guard() { gsvb_experiment_destroy(e); }
  } guard{exp};

  if (!output.empty())
    if (auto s = gsvb_experiment_set_output_dir(exp, output.c_str()); s != GSVB_OK)
      return report(s, "setting output directory");
  if (!seeds.empty())
    if (auto s = gsvb_experiment_set_seeds(exp, seeds.data(), seeds.size()); s != GSVB_OK)
      return report(s, "overriding seeds");
  if (jobs > 0)
    if (auto s = gsvb_experiment_set_threads(exp, jobs); s != GSVB_OK)
      return report(s, "setting parallelism");

  std::size_t cells = 0;
  gsvb_experiment_cell_count(exp, &cells);
  std::fprintf(stderr, "gsvb: running %zu cells\n", cells);

  std::size_t failed = 0;
  if (auto s = gsvb_experiment_run(exp, &failed); s != GSVB_OK) return report(s, "running");
  if (auto s = gsvb_experiment_write_report(exp); s != GSVB_OK)
    return report(s, "writing report");
  if (failed > 0) {
    char first[512];
    gsvb_experiment_first_failure(exp, first, sizeof first);
    std::fprintf(stderr, "gsvb: %zu of %zu cells failed (first: %s)\n", failed, cells, first);
    return kCellsFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph signal recovery with an unknown Laplacian by variational Bayes"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  auto* run = app.add_subcommand("run", "run an experiment config and write the report");
  std::string config, output;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = 0;
  run->add_option("-c,--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "output directory (overrides the config)");
  run->add_option("-s,--seed", seeds, "seed(s) replacing the config's list");
  run->add_option("-j,--jobs", jobs, "cells run in parallel (overrides the config)")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate", "write one synthetic Kronecker dataset as CSV");
  std::string gen_dir;
  int kron_order = 4, omega = 15, k = 20;
  double snr_db = 6.0;
  std::uint64_t gen_seed = 1;
  gen->add_option("-o,--output", gen_dir, "output directory")->required();
  gen->add_option("--kron-order", kron_order, "Kronecker power of the 3x3 seed")
      ->capture_default_str();
  gen->add_option("--omega", omega, "bandwidth")->capture_default_str();
  gen->add_option("-K,--snapshots", k, "number of snapshots")->capture_default_str();
  gen->add_option("--snr-db", snr_db, "signal-to-noise ratio in dB")->capture_default_str();
  gen->add_option("-s,--seed", gen_seed, "random seed")->capture_default_str();

  app.add_subcommand("version", "print the library version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (auto s = gsvb_set_log_level(log_level.c_str()); s != GSVB_OK)
    return report(s, "setting log level");

  if (app.got_subcommand("version")) {
    std::printf("%s\n", gsvb_version());
    return kOk;
  }
  if (app.got_subcommand("generate")) {
    if (auto s = gsvb_generate_synthetic(gen_dir.c_str(), kron_order, omega, k, snr_db, gen_seed);
        s != GSVB_OK)
      return report(s, "generating");
    return kOk;
  }
  return run_command(config, output, seeds, jobs);
}
