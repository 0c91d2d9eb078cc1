// catelab command-line front end: resolves presets and config files, runs the
// scenario harness, and writes CSV/JSON artifacts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catelab/config.hpp"
#include "catelab/errors.hpp"
#include "catelab/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitIo = 4;

struct RunArgs {
  std::vector<std::string> inputs;
  std::string out_dir = "catelab_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<std::uint64_t> n_units;
  unsigned threads = 1;
};

std::vector<catelab::ScenarioConfig> resolve_inputs(const RunArgs& args) {
  std::vector<catelab::ScenarioConfig> configs;
  for (const std::string& input : args.inputs) {
    if (std::filesystem::exists(input)) {
      auto parsed = catelab::parse_config_file(input);
      configs.insert(configs.end(), parsed.begin(), parsed.end());
    } else if (catelab::is_preset(input)) {
      configs.push_back(catelab::preset(input));
    } else {
      std::string names;
      for (const std::string& p : catelab::preset_names()) {
        names += " ";
        names += p;
      }
      throw catelab::config_error("'" + input +
                                  "' is neither a config file nor a preset;"
                                  " presets:" +
                                  names);
    }
  }

  const char* env_seed = std::getenv("CATELAB_SEED");
  for (catelab::ScenarioConfig& config : configs) {
    config.master_seed = catelab::resolve_master_seed(args.seed, env_seed,
                                                      config.master_seed);
    if (args.reps) config.n_replications = *args.reps;
    if (args.n_units) config.n_units = *args.n_units;
    config.validate();
  }
  return configs;
}

int do_run(const RunArgs& args) {
  const std::vector<catelab::ScenarioConfig> configs = resolve_inputs(args);

  catelab::RunOptions options;
  options.out_dir = args.out_dir;
  options.threads = args.threads;
  const catelab::RunManifest manifest =
      catelab::run_and_report(configs, options);

  for (const catelab::ScenarioRecord& s : manifest.scenarios) {
    if (!s.error.empty()) {
      std::cerr << "scenario " << s.name << " failed: " << s.error << "\n";
      continue;
    }
    std::cout << s.name << ": wrote";
    for (const std::string& f : s.files) std::cout << " " << f;
    std::cout << " (" << s.duration_seconds << " s)\n";
  }
  std::cout << "manifest: "
            << (std::filesystem::path(args.out_dir) / "manifest.json").string()
            << "\n";
  return manifest.all_succeeded() ? kExitOk : kExitEstimation;
}

int do_list_presets() {
  for (const std::string& name : catelab::preset_names()) {
    std::cout << name << "\n    " << catelab::preset_description(name) << "\n";
  }
  return kExitOk;
}

int do_verify_appendix(std::size_t vectors, std::size_t draws,
                       std::optional<std::uint64_t> seed,
                       const std::string& out_dir) {
  const char* env_seed = std::getenv("CATELAB_SEED");
  const std::uint64_t master =
      catelab::resolve_master_seed(seed, env_seed, 42);

  const auto rows = catelab::run_appendix_sweep(vectors, draws, master);

  std::cout << "beta4        beta5        rho      sigma_x  sigma_z  "
               "closed_corr  empirical_corr\n";
  double max_gap = 0.0;
  bool in_range = true;
  for (const catelab::AppendixRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "%-12.6f %-12.6f %-8.4f %-8.4f %-8.4f %-12.8f %-12.8f\n",
                  r.beta4, r.beta5, r.rho, r.sigma_x, r.sigma_z,
                  r.closed_form_corr, r.empirical_corr);
    std::cout << line;
    max_gap = std::max(max_gap,
                       std::abs(r.closed_form_corr - r.empirical_corr));
    if (r.closed_form_corr < 0.0 || r.closed_form_corr > 1.0) in_range = false;
  }
  std::cout << "max |closed-form - empirical| correlation gap: " << max_gap
            << "\n";

  if (!out_dir.empty()) {
    catelab::ScenarioConfig config = catelab::preset("appendix-sweep");
    config.n_replications = vectors;
    config.n_units = draws;
    config.master_seed = master;
    catelab::RunOptions options;
    options.out_dir = out_dir;
    catelab::run_and_report({config}, options);
    std::cout << "wrote table under " << out_dir << "\n";
  }

  if (!in_range) {
    std::cerr << "FAIL: closed-form correlation escaped [0, 1]\n";
    return kExitEstimation;
  }
  if (max_gap > 0.01) {
    std::cerr << "FAIL: correlation gap " << max_gap << " exceeds 0.01\n";
    return kExitEstimation;
  }
  std::cout << "OK: closed forms agree with Monte Carlo within 0.01\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catelab: simulation laboratory for conditional average vs "
               "individual treatment effects"};
  app.set_version_flag("--version", std::string(catelab::kToolVersion));
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "run scenarios from presets and/or config files");
  run->add_option("inputs", run_args.inputs,
                  "preset names and/or config file paths")
      ->required();
  run->add_option("--out", run_args.out_dir, "output directory")
      ->capture_default_str();
  run->add_option("--seed", run_args.seed,
                  "master seed override for every scenario");
  run->add_option("--reps", run_args.reps,
                  "replication-count override for every scenario");
  run->add_option("--n", run_args.n_units,
                  "unit-count override for every scenario");
  run->add_option("--threads", run_args.threads,
                  "worker threads (affects speed only, never output bytes)")
      ->capture_default_str();

  CLI::App* list =
      app.add_subcommand("list-presets", "list built-in scenario presets");

  std::size_t va_vectors = 20;
  std::size_t va_draws = 1000000;
  std::optional<std::uint64_t> va_seed;
  std::string va_out;
  CLI::App* verify = app.add_subcommand(
      "verify-appendix",
      "check the closed-form CATE/ITE correlation against Monte Carlo");
  verify->add_option("--vectors", va_vectors, "random parameter vectors")
      ->capture_default_str();
  verify->add_option("--draws", va_draws, "Monte Carlo draws per vector")
      ->capture_default_str();
  verify->add_option("--seed", va_seed, "master seed");
  verify->add_option("--out", va_out, "also write the table to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return do_run(run_args);
    if (list->parsed()) return do_list_presets();
    if (verify->parsed()) {
      return do_verify_appendix(va_vectors, va_draws, va_seed, va_out);
    }
  } catch (const catelab::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const catelab::invalid_parameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const catelab::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const catelab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitOk;
}
