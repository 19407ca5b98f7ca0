#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "sgmcmc/checkpoint.hpp"

namespace sgmcmc {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw config_error(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw config_error(where + ": unknown key '" + item.key() + "'");
    }
  }
}

std::vector<double> knob_list(const json& j, const std::string& where) {
  std::vector<double> knobs;
  if (j.is_array()) {
    for (const auto& v : j) knobs.push_back(v.get<double>());
  } else {
    knobs.push_back(j.get<double>());
  }
  if (knobs.empty()) throw config_error(where + ": sweep list is empty");
  return knobs;
}

ModelSpec parse_model(const json& j) {
  expect_keys(j, "model", {"kind", "prior_precision", "noise_variance"});
  ModelSpec m;
  m.kind = j.at("kind").get<std::string>();
  if (m.kind != "linear" && m.kind != "logistic") {
    throw config_error("model.kind must be 'linear' or 'logistic'");
  }
  m.prior_precision = j.value("prior_precision", 1.0);
  if (!(m.prior_precision > 0)) throw config_error("model.prior_precision must be positive");
  m.noise_variance = j.value("noise_variance", 1.0);
  if (m.kind == "linear" && !(m.noise_variance > 0)) {
    throw config_error("model.noise_variance must be positive");
  }
  return m;
}

SyntheticSpec parse_synthetic(const json& j) {
  expect_keys(j, "data.synthetic", {"kind", "n", "dim", "seed", "noise_variance"});
  SyntheticSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    s.kind = SyntheticKind::linear;
  } else if (kind == "logistic") {
    s.kind = SyntheticKind::logistic;
  } else {
    throw config_error("data.synthetic.kind must be 'linear' or 'logistic'");
  }
  s.n = j.at("n").get<Index>();
  s.dim = j.at("dim").get<Index>();
  s.seed = j.value("seed", std::uint64_t(0));
  s.noise_variance = j.value("noise_variance", 1.0);
  if (s.n < 1 || s.dim < 1) throw config_error("data.synthetic: need n >= 1 and dim >= 1");
  return s;
}

DataSpec parse_data(const json& j) {
  expect_keys(j, "data", {"path", "synthetic"});
  DataSpec d;
  if (j.contains("path")) d.path = j.at("path").get<std::string>();
  if (j.contains("synthetic")) d.synthetic = parse_synthetic(j.at("synthetic"));
  if (d.path.has_value() == d.synthetic.has_value()) {
    throw config_error("data: exactly one of 'path' or 'synthetic' is required");
  }
  return d;
}

SamplerSweep parse_sampler(const json& j, int position) {
  const std::string where = "samplers[" + std::to_string(position) + "]";
  const std::string kind = j.at("kind").get<std::string>();
  SamplerSweep sweep;

  if (kind == "sgfs-f" || kind == "sgfs-d") {
    expect_keys(j, where,
                {"kind", "n", "alpha", "b", "jitter_scale", "kappa_exponent", "freeze_after",
                 "epsilon_schedule", "with_replacement"});
    SgfsConfig<double> c;
    c.form = kind == "sgfs-f" ? FisherForm::full : FisherForm::diagonal;
    c.minibatch = j.at("n").get<Index>();
    if (j.contains("b")) c.b_spec = b_spec_from_json(j.at("b"));
    c.jitter_scale = j.value("jitter_scale", 1e-8);
    c.kappa.exponent = j.value("kappa_exponent", 1.0);
    if (j.contains("freeze_after") && !j.at("freeze_after").is_null()) {
      c.freeze_after = j.at("freeze_after").get<std::int64_t>();
    }
    if (j.contains("epsilon_schedule") && !j.at("epsilon_schedule").is_null()) {
      c.epsilon_schedule = schedule_from_json(j.at("epsilon_schedule"));
    }
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    sweep.knobs = knob_list(j.at("alpha"), where + ".alpha");
    sweep.knob_name = "alpha";
    sweep.base = c;
    return sweep;
  }
  if (kind == "sgld") {
    expect_keys(j, where,
                {"kind", "n", "epsilon", "preconditioner", "epsilon_schedule", "with_replacement"});
    SgldConfig<double> c;
    c.minibatch = j.at("n").get<Index>();
    if (j.contains("preconditioner") && !j.at("preconditioner").is_null()) {
      const auto& p = j.at("preconditioner");
      const Index d = p.at("dim").get<Index>();
      const auto values = p.at("values").get<std::vector<double>>();
      if (static_cast<Index>(values.size()) != d * d) {
        throw config_error(where + ".preconditioner: needs dim*dim values");
      }
      MatrixX<double> m(d, d);
      std::copy(values.begin(), values.end(), m.data());
      c.preconditioner = std::move(m);
    }
    if (j.contains("epsilon_schedule") && !j.at("epsilon_schedule").is_null()) {
      c.epsilon_schedule = schedule_from_json(j.at("epsilon_schedule"));
    }
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    sweep.knobs = knob_list(j.at("epsilon"), where + ".epsilon");
    sweep.knob_name = "epsilon";
    sweep.base = c;
    return sweep;
  }
  if (kind == "sgd") {
    expect_keys(j, where, {"kind", "n", "schedule", "with_replacement"});
    SgdConfig<double> c;
    c.minibatch = j.at("n").get<Index>();
    c.schedule = schedule_from_json(j.at("schedule"));
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    sweep.knobs = {c.schedule.a};
    sweep.knob_name = "a";
    sweep.base = c;
    return sweep;
  }
  if (kind == "hmc") {
    expect_keys(j, where,
                {"kind", "leapfrog", "step_size", "target_accept", "adapt_iterations"});
    HmcConfig<double> c;
    c.step_size = j.value("step_size", 0.1);
    c.target_accept = j.value("target_accept", 0.8);
    c.adapt_iterations = j.value("adapt_iterations", std::int64_t(-1));
    sweep.knobs = knob_list(j.at("leapfrog"), where + ".leapfrog");
    sweep.knob_name = "leapfrog";
    sweep.base = c;
    return sweep;
  }
  throw config_error(where + ": unknown sampler kind '" + kind + "'");
}

ReferenceSpec parse_reference(const json& j) {
  expect_keys(j, "reference", {"kind", "hmc"});
  ReferenceSpec r;
  r.kind = j.value("kind", std::string("auto"));
  if (r.kind != "auto" && r.kind != "oracle" && r.kind != "grid" && r.kind != "hmc") {
    throw config_error("reference.kind must be auto, oracle, grid, or hmc");
  }
  if (j.contains("hmc")) {
    const auto& h = j.at("hmc");
    expect_keys(h, "reference.hmc",
                {"iterations", "burn_in", "leapfrog_steps", "step_size", "target_accept"});
    r.hmc_iterations = h.value("iterations", std::int64_t(0));
    r.hmc_burn_in = h.value("burn_in", std::int64_t(0));
    r.hmc.leapfrog_steps = h.value("leapfrog_steps", 20);
    r.hmc.step_size = h.value("step_size", 0.1);
    r.hmc.target_accept = h.value("target_accept", 0.8);
  }
  return r;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  expect_keys(j, "config",
              {"model", "data", "projection", "samplers", "run", "reference", "output", "seed",
               "workers"});
  ExperimentConfig cfg;
  cfg.model = parse_model(j.at("model"));
  cfg.data = parse_data(j.at("data"));
  if (j.contains("projection")) {
    expect_keys(j.at("projection"), "projection", {"dim", "seed"});
    ProjectionSpec p;
    p.dim = j.at("projection").at("dim").get<Index>();
    p.seed = j.at("projection").value("seed", std::uint64_t(0));
    if (p.dim < 1) throw config_error("projection.dim must be >= 1");
    cfg.projection = p;
  }

  if (!j.contains("samplers") || !j.at("samplers").is_array() || j.at("samplers").empty()) {
    throw config_error("samplers: need a nonempty list");
  }
  int position = 0;
  for (const auto& entry : j.at("samplers")) {
    cfg.samplers.push_back(parse_sampler(entry, position++));
  }

  const auto& run = j.at("run");
  expect_keys(run, "run", {"iterations", "burn_in", "thin"});
  cfg.run.iterations = run.at("iterations").get<std::int64_t>();
  cfg.run.burn_in = run.value("burn_in", std::int64_t(0));
  cfg.run.thin = run.value("thin", std::int64_t(1));
  cfg.run.validate();

  if (j.contains("reference")) cfg.reference = parse_reference(j.at("reference"));
  cfg.output = j.value("output", std::string("out"));
  cfg.seed = j.value("seed", std::uint64_t(0));
  cfg.workers = j.value("workers", 1);
  if (cfg.workers < 1) throw config_error("workers must be >= 1");

  if (cfg.model.kind == "logistic" && cfg.data.synthetic &&
      cfg.data.synthetic->kind != SyntheticKind::logistic) {
    throw config_error("logistic model requires logistic synthetic data");
  }
  if (cfg.model.kind == "linear" && cfg.data.synthetic &&
      cfg.data.synthetic->kind != SyntheticKind::linear) {
    throw config_error("linear model requires linear synthetic data");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  return parse_experiment_config(j);
}

std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  int index = 0;
  for (const auto& sweep : cfg.samplers) {
    for (const double knob : sweep.knobs) {
      RunSpec run;
      run.index = index;
      run.knob = knob;
      run.knob_name = sweep.knob_name;
      run.seed = cfg.seed ^ static_cast<std::uint64_t>(index);
      run.spec = sweep.base;
      std::visit(
          [&](auto& c) {
            using Cfg = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<Cfg, SgfsConfig<double>>) {
              c.alpha = knob;
            } else if constexpr (std::is_same_v<Cfg, SgldConfig<double>>) {
              c.epsilon = knob;
            } else if constexpr (std::is_same_v<Cfg, SgdConfig<double>>) {
              c.schedule.a = knob;
            } else {
              c.leapfrog_steps = static_cast<int>(knob);
            }
          },
          run.spec);

      char name[128];
      std::snprintf(name, sizeof(name), "run%02d_%s_%s%g", run.index,
                    kind_label(kind_of(run.spec)).c_str(), run.knob_name.c_str(), run.knob);
      run.name = name;
      runs.push_back(std::move(run));
      ++index;
    }
  }
  return runs;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = {{"kind", cfg.model.kind}, {"prior_precision", cfg.model.prior_precision}};
  if (cfg.model.kind == "linear") j["model"]["noise_variance"] = cfg.model.noise_variance;
  if (cfg.data.path) {
    j["data"] = {{"path", *cfg.data.path}};
  } else {
    const auto& s = *cfg.data.synthetic;
    j["data"] = {{"synthetic",
                  {{"kind", synthetic_kind_label(s.kind)},
                   {"n", s.n},
                   {"dim", s.dim},
                   {"seed", s.seed},
                   {"noise_variance", s.noise_variance}}}};
  }
  if (cfg.projection) {
    j["projection"] = {{"dim", cfg.projection->dim}, {"seed", cfg.projection->seed}};
  }
  j["samplers"] = json::array();
  for (const auto& sweep : cfg.samplers) {
    json entry = to_json(sweep.base);
    // keep the snapshot re-parseable: sweep keys replace the single-value ones
    if (std::holds_alternative<HmcConfig<double>>(sweep.base)) {
      entry.erase("leapfrog_steps");
      entry["leapfrog"] = sweep.knobs;
    } else if (!std::holds_alternative<SgdConfig<double>>(sweep.base)) {
      entry[sweep.knob_name] = sweep.knobs;
    }
    j["samplers"].push_back(entry);
  }
  j["run"] = {{"iterations", cfg.run.iterations},
              {"burn_in", cfg.run.burn_in},
              {"thin", cfg.run.thin}};
  j["reference"] = {{"kind", cfg.reference.kind}};
  j["output"] = cfg.output;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  return j;
}

}  // namespace sgmcmc
