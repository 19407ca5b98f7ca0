// Command-line front end: generate synthetic datasets, run configured
// sampler sweeps, recompute diagnostics, and merge reports into plot data.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiment.hpp"
#include "sgmcmc/io.hpp"
#include "sgmcmc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

sgmcmc::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  auto cfg = sgmcmc::load_experiment_config(flags.config_path);
  if (flags.out_dir) cfg.output = *flags.out_dir;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.workers) cfg.workers = *flags.workers;
  return cfg;
}

int run_generate(const CommonFlags& flags) {
  const auto cfg = load_with_overrides(flags);
  if (!cfg.data.synthetic) {
    throw sgmcmc::config_error("generate: config must have a data.synthetic section");
  }
  const auto& s = *cfg.data.synthetic;
  auto synth = sgmcmc::generate_synthetic<double>(
      s.kind, s.n, s.dim, s.seed,
      s.kind == sgmcmc::SyntheticKind::linear ? std::optional<double>(s.noise_variance)
                                              : std::nullopt);

  fs::create_directories(cfg.output);
  const fs::path csv_path = fs::path(cfg.output) / "dataset.csv";
  const fs::path meta_path = fs::path(cfg.output) / "dataset.meta.json";
  sgmcmc::save_dataset_csv(synth.data, csv_path.string());

  json meta;
  meta["kind"] = sgmcmc::synthetic_kind_label(s.kind);
  meta["n"] = s.n;
  meta["dim"] = s.dim;
  meta["seed"] = synth.seed;
  meta["theta0"] = std::vector<double>(synth.theta0.data(), synth.theta0.data() + synth.theta0.size());
  if (synth.noise_variance) meta["noise_variance"] = *synth.noise_variance;
  std::ofstream meta_out(meta_path);
  meta_out << meta.dump(2) << "\n";

  std::cout << "wrote " << csv_path.string() << " and " << meta_path.string() << "\n";
  return 0;
}

int run_run(const CommonFlags& flags) {
  const auto cfg = load_with_overrides(flags);
  const auto artifacts = sgmcmc::run_experiment(cfg, &std::cout);
  bool all_ok = true;
  for (const auto& a : artifacts) all_ok = all_ok && a.ok;
  std::cout << "plot data: " << (fs::path(cfg.output) / "plot_data.csv").string() << "\n";
  return all_ok ? 0 : 2;
}

int run_diagnose(const CommonFlags& flags) {
  const auto cfg = load_with_overrides(flags);
  const auto artifacts = sgmcmc::diagnose_experiment(cfg, &std::cout);
  bool all_ok = true;
  for (const auto& a : artifacts) all_ok = all_ok && a.ok;
  return all_ok ? 0 : 2;
}

int run_compare(const std::vector<std::string>& reports, const std::string& out_path) {
  sgmcmc::write_plot_csv(reports, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

void print_error_record(const std::string& type, const std::string& message) {
  json record;
  record["error"] = {{"type", type}, {"message", message}};
  std::cerr << record.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minibatch-gradient posterior samplers with Fisher-scoring preconditioning"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string compare_out = "plot_data.csv";
  std::vector<std::string> compare_reports;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config file (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", [&flags](const std::vector<std::string>& v) {
      flags.out_dir = v.front();
      return true;
    }, "output directory (overrides config)");
    cmd->add_option("--seed", [&flags](const std::vector<std::string>& v) {
      flags.seed = std::stoull(v.front());
      return true;
    }, "master seed (overrides config)");
    cmd->add_option("--workers", [&flags](const std::vector<std::string>& v) {
      flags.workers = std::stoi(v.front());
      return true;
    }, "parallel run workers (overrides config)");
  };

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset CSV plus metadata");
  add_common(generate, true);
  auto* run = app.add_subcommand("run", "run the configured sampler sweep");
  add_common(run, true);
  auto* diagnose = app.add_subcommand("diagnose", "recompute diagnostics from existing traces");
  add_common(diagnose, true);
  auto* compare = app.add_subcommand("compare", "merge reports into a plot-data CSV");
  compare->add_option("--out", compare_out, "output CSV path");
  compare->add_option("reports", compare_reports, "diagnostics report JSON files")->required();

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return run_generate(flags);
    if (run->parsed()) return run_run(flags);
    if (diagnose->parsed()) return run_diagnose(flags);
    if (compare->parsed()) return run_compare(compare_reports, compare_out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error_record("cli", e.what());
    return app.exit(e);
  } catch (const sgmcmc::config_error& e) {
    print_error_record("config", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error_record("runtime", e.what());
    return 1;
  }
  return 0;
}
