#include "experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "sgmcmc/checkpoint.hpp"
#include "sgmcmc/grid_oracle.hpp"
#include "sgmcmc/io.hpp"

namespace sgmcmc {

namespace fs = std::filesystem;
using nlohmann::json;

BuiltModel build_model(const ExperimentConfig& cfg) {
  Dataset<double> data;
  json provenance;
  if (cfg.data.path) {
    data = load_dataset_csv<double>(*cfg.data.path);
    if (cfg.model.kind == "logistic") data = remap_binary_labels(data);
    provenance["path"] = *cfg.data.path;
  } else {
    const auto& s = *cfg.data.synthetic;
    auto synth = generate_synthetic<double>(s.kind, s.n, s.dim, s.seed,
                                            s.kind == SyntheticKind::linear
                                                ? std::optional<double>(s.noise_variance)
                                                : std::nullopt);
    data = std::move(synth.data);
    provenance["synthetic"] = {{"kind", synthetic_kind_label(s.kind)},
                               {"n", s.n},
                               {"dim", s.dim},
                               {"seed", s.seed}};
  }
  if (cfg.projection) {
    data = random_projection(data, cfg.projection->dim, cfg.projection->seed);
    provenance["projection"] = {{"dim", cfg.projection->dim}, {"seed", cfg.projection->seed}};
  }

  BuiltModel built;
  built.provenance = std::move(provenance);
  GaussianPrior<double> prior(cfg.model.prior_precision);
  if (cfg.model.kind == "linear") {
    built.model = std::make_shared<LinearRegressionModel<double>>(std::move(data), prior,
                                                                  cfg.model.noise_variance);
  } else {
    built.model = std::make_shared<LogisticRegressionModel<double>>(std::move(data), prior);
  }
  return built;
}

MomentSummary<double> reference_moments(const ExperimentConfig& cfg, const Model<double>& model,
                                        std::string& name_out) {
  const auto* linear = dynamic_cast<const LinearRegressionModel<double>*>(&model);
  std::string kind = cfg.reference.kind;
  if (kind == "auto") {
    if (linear) {
      kind = "oracle";
    } else if (model.dim() <= 2) {
      kind = "grid";
    } else {
      kind = "hmc";
    }
  }

  if (kind == "oracle") {
    if (!linear) throw config_error("reference: conjugate oracle needs a linear model");
    const auto post = exact_posterior(*linear);
    name_out = "conjugate_oracle";
    return {post.mean, post.covariance, 0};
  }
  if (kind == "grid") {
    if (model.dim() > 3) throw config_error("reference: grid oracle supports D <= 3");
    name_out = "grid_oracle";
    return grid_posterior_moments(model, model.dim() <= 2 ? Index(401) : Index(81));
  }

  // long HMC fallback
  name_out = "long_hmc";
  RunOptions opt;
  opt.iterations = cfg.reference.hmc_iterations > 0 ? cfg.reference.hmc_iterations
                                                    : std::max<std::int64_t>(3 * cfg.run.iterations,
                                                                             20000);
  opt.burn_in = cfg.reference.hmc_burn_in > 0 ? cfg.reference.hmc_burn_in : opt.iterations / 10;
  opt.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  HmcConfig<double> hmc = cfg.reference.hmc;
  if (hmc.adapt_iterations < 0) hmc.adapt_iterations = opt.burn_in;
  HmcSampler<double, PosteriorTarget<double>> sampler(PosteriorTarget<double>{&model}, hmc);
  const auto trace = run_chain(sampler, VectorX<double>::Zero(model.dim()).eval(), opt, "hmc");
  return running_moments(trace);
}

namespace {

json run_config_snapshot(const ExperimentConfig& cfg, const RunSpec& run) {
  json snapshot = experiment_config_to_json(cfg);
  snapshot["samplers"] = json::array({to_json(run.spec)});
  snapshot["run_seed"] = run.seed;
  snapshot["run_name"] = run.name;
  return snapshot;
}

//! E1/E2 at ten checkpoints through the retained samples plus mixing
//! statistics; `acceptance` is reported for HMC runs only.
json diagnostics_report(const Trace<double>& trace, const MomentSummary<double>& ref,
                        const std::string& ref_name, std::optional<double> acceptance) {
  json report;
  report["reference"] = ref_name;

  json e1_checkpoints = json::array();
  json e2_checkpoints = json::array();
  const Index total = trace.size();
  RunningMoments<double> acc(trace.dim());
  Index next_checkpoint = 0;
  std::vector<Index> checkpoints;
  for (int k = 1; k <= 10; ++k) {
    const Index c = std::max<Index>(2, total * k / 10);
    if (checkpoints.empty() || c != checkpoints.back()) checkpoints.push_back(c);
  }
  double e1_final = std::numeric_limits<double>::quiet_NaN();
  double e2_final = std::numeric_limits<double>::quiet_NaN();
  for (Index i = 0; i < total; ++i) {
    acc.update(trace.samples.row(i).transpose());
    if (next_checkpoint < static_cast<Index>(checkpoints.size()) &&
        i + 1 == checkpoints[static_cast<std::size_t>(next_checkpoint)]) {
      const auto [e1, e2] = relative_errors(acc.summary(), ref);
      e1_checkpoints.push_back({i + 1, e1});
      e2_checkpoints.push_back({i + 1, e2});
      e1_final = e1;
      e2_final = e2;
      ++next_checkpoint;
    }
  }
  report["e1_checkpoints"] = e1_checkpoints;
  report["e2_checkpoints"] = e2_checkpoints;
  report["e1_final"] = e1_final;
  report["e2_final"] = e2_final;

  // ACT per coordinate, skipping degenerate (constant) ones
  double act_total = 0.0;
  Index act_count = 0;
  for (Index j = 0; j < trace.dim(); ++j) {
    try {
      act_total += autocorrelation_time<double>(trace.samples.col(j).eval());
      ++act_count;
    } catch (const zero_variance_error&) {
    }
  }
  const double tps = trace.time_per_sample();
  report["time_per_sample"] = tps;
  if (act_count > 0) {
    const double mean_act = act_total / static_cast<double>(act_count);
    report["mean_act"] = mean_act;
    report["atuc"] = mean_act * tps;
  } else {
    report["mean_act"] = nullptr;
    report["atuc"] = nullptr;
  }
  if (acceptance) report["acceptance_rate"] = *acceptance;
  return report;
}

struct RunOutcome {
  RunArtifact artifact;
  json report;
};

RunOutcome execute_run(const ExperimentConfig& cfg, const Model<double>& model,
                       const MomentSummary<double>& ref, const std::string& ref_name,
                       const RunSpec& run, bool rerun_chain) {
  RunOutcome outcome;
  outcome.artifact.name = run.name;
  const fs::path out_dir(cfg.output);
  const fs::path trace_path = out_dir / (run.name + ".csv");
  const fs::path report_path = out_dir / (run.name + ".report.json");
  outcome.artifact.trace_path = trace_path.string();
  outcome.artifact.report_path = report_path.string();

  json report;
  report["run"] = run.name;
  report["sampler"] = kind_label(kind_of(run.spec));
  report["knob_name"] = run.knob_name;
  report["knob"] = run.knob;
  report["trace"] = trace_path.string();
  report["config_snapshot"] = run_config_snapshot(cfg, run);

  try {
    std::optional<double> acceptance;
    Trace<double> trace;
    if (rerun_chain) {
      RunOptions opt = cfg.run;
      opt.seed = run.seed;
      const std::string snapshot = report["config_snapshot"].dump();
      if (const auto* hmc_cfg = std::get_if<HmcConfig<double>>(&run.spec)) {
        HmcConfig<double> resolved = *hmc_cfg;
        if (resolved.adapt_iterations < 0) resolved.adapt_iterations = opt.burn_in;
        HmcSampler<double, PosteriorTarget<double>> sampler(PosteriorTarget<double>{&model},
                                                            resolved);
        trace = run_chain(sampler, VectorX<double>::Zero(model.dim()).eval(), opt, "hmc", snapshot);
        acceptance = sampler.acceptance_rate();
      } else {
        trace = run_chain(model, run.spec, opt, nullptr, snapshot);
      }
      save_trace_csv(trace, trace_path.string());
    } else {
      trace = load_trace_csv<double>(trace_path.string());
    }

    report.update(diagnostics_report(trace, ref, ref_name, acceptance));
    report["error"] = nullptr;
    outcome.artifact.ok = true;
  } catch (const std::exception& e) {
    report["error"] = e.what();
    outcome.artifact.ok = false;
    outcome.artifact.error = e.what();
  }

  std::ofstream out(report_path);
  out << report.dump(2) << "\n";
  outcome.report = report;
  return outcome;
}

std::vector<RunArtifact> run_all(const ExperimentConfig& cfg, std::ostream* log, bool rerun) {
  fs::create_directories(cfg.output);
  const BuiltModel built = build_model(cfg);
  std::string ref_name;
  const MomentSummary<double> ref = reference_moments(cfg, *built.model, ref_name);
  if (log) *log << "reference: " << ref_name << "\n";

  const std::vector<RunSpec> runs = expand_runs(cfg);
  std::vector<RunOutcome> outcomes(runs.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      outcomes[i] = execute_run(cfg, *built.model, ref, ref_name, runs[i], rerun);
      if (log) {
        std::scoped_lock lock(log_mutex);
        *log << (outcomes[i].artifact.ok ? "done " : "FAILED ") << runs[i].name;
        if (!outcomes[i].artifact.ok) *log << ": " << outcomes[i].artifact.error;
        *log << "\n";
      }
    }
  };

  const int workers = std::min<int>(cfg.workers, static_cast<int>(runs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<std::string> report_paths;
  std::vector<RunArtifact> artifacts;
  for (auto& outcome : outcomes) {
    report_paths.push_back(outcome.artifact.report_path);
    artifacts.push_back(std::move(outcome.artifact));
  }
  write_plot_csv(report_paths, (fs::path(cfg.output) / "plot_data.csv").string());

  json summary;
  summary["config"] = experiment_config_to_json(cfg);
  summary["reference"] = ref_name;
  summary["runs"] = json::array();
  for (const auto& a : artifacts) {
    summary["runs"].push_back({{"name", a.name},
                               {"trace", a.trace_path},
                               {"report", a.report_path},
                               {"ok", a.ok},
                               {"error", a.ok ? json(nullptr) : json(a.error)}});
  }
  std::ofstream out(fs::path(cfg.output) / "experiment.json");
  out << summary.dump(2) << "\n";
  return artifacts;
}

}  // namespace

std::vector<RunArtifact> run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  return run_all(cfg, log, /*rerun=*/true);
}

std::vector<RunArtifact> diagnose_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  return run_all(cfg, log, /*rerun=*/false);
}

void write_plot_csv(const std::vector<std::string>& report_paths, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw config_error("write_plot_csv: cannot open " + out_path);
  out << "sampler,knob_value,inverse_atuc,E1_at_T,E2_at_T\n";

  auto number_or = [](const json& j, const char* key, double fallback) {
    return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : fallback;
  };

  for (const auto& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw config_error("write_plot_csv: cannot open report " + path);
    json report;
    in >> report;
    if (report.contains("error") && !report.at("error").is_null()) continue;
    const double atuc = number_or(report, "atuc", 0.0);
    out << report.at("sampler").get<std::string>() << ","
        << detail::format_value(report.at("knob").get<double>()) << ","
        << detail::format_value(atuc > 0 ? 1.0 / atuc : 0.0) << ","
        << detail::format_value(number_or(report, "e1_final", 0.0)) << ","
        << detail::format_value(number_or(report, "e2_final", 0.0)) << "\n";
  }
}

}  // namespace sgmcmc
