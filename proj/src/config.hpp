#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgmcmc/samplers.hpp"
#include "sgmcmc/synthetic.hpp"

namespace sgmcmc {

struct ModelSpec {
  std::string kind = "linear";  // "linear" | "logistic"
  double prior_precision = 1.0;
  double noise_variance = 1.0;  // linear only
};

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::linear;
  Index n = 1000;
  Index dim = 5;
  std::uint64_t seed = 0;
  double noise_variance = 1.0;
};

struct DataSpec {
  std::optional<std::string> path;
  std::optional<SyntheticSpec> synthetic;
};

struct ProjectionSpec {
  Index dim = 0;
  std::uint64_t seed = 0;
};

//! One sampler entry from the config along with its knob sweep list.
struct SamplerSweep {
  SamplerSpec<double> base;
  std::vector<double> knobs;  // alpha (sgfs), epsilon (sgld), leapfrog (hmc), a (sgd)
  std::string knob_name;
};

struct ReferenceSpec {
  std::string kind = "auto";  // "auto" | "oracle" | "grid" | "hmc"
  HmcConfig<double> hmc;      // fallback chain settings
  std::int64_t hmc_iterations = 0;  // 0: derived from run length
  std::int64_t hmc_burn_in = 0;
};

struct ExperimentConfig {
  ModelSpec model;
  DataSpec data;
  std::optional<ProjectionSpec> projection;
  std::vector<SamplerSweep> samplers;
  RunOptions run;
  ReferenceSpec reference;
  std::string output = "out";
  std::uint64_t seed = 0;
  int workers = 1;
};

//! A single expanded run of the sweep.
struct RunSpec {
  std::string name;
  SamplerSpec<double> spec;
  double knob = 0.0;
  std::string knob_name;
  std::uint64_t seed = 0;
  int index = 0;
};

//! Parses and validates an experiment config; unknown keys are errors.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

//! Expands sweep lists into independent runs; run seed = master seed XOR
//! run index.
std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg);

//! Round-trippable snapshot of the full experiment configuration.
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace sgmcmc
