#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "sgmcmc/diagnostics.hpp"
#include "sgmcmc/model.hpp"

namespace sgmcmc {

//! Outputs of one run in the sweep.  `config_snapshot` inside the report
//! suffices to reproduce the trace bit-exactly.
struct RunArtifact {
  std::string name;
  std::string trace_path;
  std::string report_path;
  bool ok = false;
  std::string error;
};

//! Model plus the dataset it was built over, with provenance for reports.
struct BuiltModel {
  std::shared_ptr<Model<double>> model;
  nlohmann::json provenance;
};

BuiltModel build_model(const ExperimentConfig& cfg);

//! Reference posterior moments: conjugate oracle (linear), grid quadrature
//! (logistic with D <= 2), or a long HMC run otherwise.  `name_out` reports
//! which reference was used.
MomentSummary<double> reference_moments(const ExperimentConfig& cfg, const Model<double>& model,
                                        std::string& name_out);

//! Runs every sampler x knob combination, writing one trace CSV, one
//! diagnostics report JSON per run, and a combined Figure-2-style plot CSV.
//! Failed runs are recorded and the remaining runs continue.
std::vector<RunArtifact> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

//! Recomputes diagnostics reports (and the plot CSV) from traces already on
//! disk under cfg.output.
std::vector<RunArtifact> diagnose_experiment(const ExperimentConfig& cfg,
                                             std::ostream* log = nullptr);

//! Collects (sampler, knob_value, inverse_atuc, E1_at_T, E2_at_T) rows from
//! report files into a plot-data CSV.
void write_plot_csv(const std::vector<std::string>& report_paths, const std::string& out_path);

}  // namespace sgmcmc
