#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgmcmc/fisher.hpp"
#include "sgmcmc/samplers.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

using json = nlohmann::json;

// --- JSON serialization of sampler configurations (double precision) -------

inline json to_json(const ScheduleConfig<double>& s) {
  return json{{"a", s.a}, {"b", s.b}, {"delta", s.delta}};
}

inline ScheduleConfig<double> schedule_from_json(const json& j) {
  ScheduleConfig<double> s;
  s.a = j.at("a").get<double>();
  s.b = j.at("b").get<double>();
  s.delta = j.at("delta").get<double>();
  s.validate();
  return s;
}

inline json to_json(const BSpec<double>& b) {
  switch (b.kind) {
    case BSpec<double>::Kind::gamma_fisher: return json("gamma_fisher");
    case BSpec<double>::Kind::scaled_identity:
      return json{{"scaled_identity", b.scale}};
    case BSpec<double>::Kind::explicit_matrix: {
      std::vector<double> values(b.matrix.data(), b.matrix.data() + b.matrix.size());
      return json{{"explicit", {{"dim", b.matrix.rows()}, {"values", values}}}};
    }
  }
  throw config_error("BSpec: unknown kind");
}

inline BSpec<double> b_spec_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "gamma_fisher") {
      throw config_error("b_spec: unknown value '" + j.get<std::string>() + "'");
    }
    return BSpec<double>::gamma_fisher();
  }
  if (j.contains("scaled_identity")) {
    return BSpec<double>::scaled_identity(j.at("scaled_identity").get<double>());
  }
  if (j.contains("explicit")) {
    const auto& e = j.at("explicit");
    const Index d = e.at("dim").get<Index>();
    const auto values = e.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != d * d) {
      throw config_error("b_spec: explicit matrix needs dim*dim values");
    }
    MatrixX<double> m(d, d);
    std::copy(values.begin(), values.end(), m.data());
    return BSpec<double>::explicit_matrix(std::move(m));
  }
  throw config_error("b_spec: expected 'gamma_fisher', {scaled_identity}, or {explicit}");
}

inline json to_json(const SgfsConfig<double>& c) {
  json j{{"kind", c.form == FisherForm::full ? "sgfs-f" : "sgfs-d"},
         {"n", c.minibatch},
         {"alpha", c.alpha},
         {"b", to_json(c.b_spec)},
         {"jitter_scale", c.jitter_scale},
         {"kappa_exponent", c.kappa.exponent},
         {"with_replacement", c.policy == MinibatchPolicy::with_replacement}};
  if (c.freeze_after) j["freeze_after"] = *c.freeze_after;
  if (c.epsilon_schedule) j["epsilon_schedule"] = to_json(*c.epsilon_schedule);
  return j;
}

inline json to_json(const SgldConfig<double>& c) {
  json j{{"kind", "sgld"},
         {"n", c.minibatch},
         {"epsilon", c.epsilon},
         {"with_replacement", c.policy == MinibatchPolicy::with_replacement}};
  if (c.preconditioner) {
    std::vector<double> values(c.preconditioner->data(),
                               c.preconditioner->data() + c.preconditioner->size());
    j["preconditioner"] = {{"dim", c.preconditioner->rows()}, {"values", values}};
  }
  if (c.epsilon_schedule) j["epsilon_schedule"] = to_json(*c.epsilon_schedule);
  return j;
}

inline json to_json(const SgdConfig<double>& c) {
  return json{{"kind", "sgd"},
              {"n", c.minibatch},
              {"schedule", to_json(c.schedule)},
              {"with_replacement", c.policy == MinibatchPolicy::with_replacement}};
}

inline json to_json(const HmcConfig<double>& c) {
  return json{{"kind", "hmc"},
              {"leapfrog_steps", c.leapfrog_steps},
              {"step_size", c.step_size},
              {"target_accept", c.target_accept},
              {"adapt_iterations", c.adapt_iterations}};
}

inline json to_json(const SamplerSpec<double>& spec) {
  return std::visit([](const auto& c) { return to_json(c); }, spec);
}

inline SamplerSpec<double> sampler_spec_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sgfs-f" || kind == "sgfs-d") {
    SgfsConfig<double> c;
    c.form = kind == "sgfs-f" ? FisherForm::full : FisherForm::diagonal;
    c.minibatch = j.at("n").get<Index>();
    c.alpha = j.at("alpha").get<double>();
    c.b_spec = b_spec_from_json(j.at("b"));
    c.jitter_scale = j.value("jitter_scale", 1e-8);
    c.kappa.exponent = j.value("kappa_exponent", 1.0);
    if (j.contains("freeze_after") && !j.at("freeze_after").is_null()) {
      c.freeze_after = j.at("freeze_after").get<std::int64_t>();
    }
    if (j.contains("epsilon_schedule") && !j.at("epsilon_schedule").is_null()) {
      c.epsilon_schedule = schedule_from_json(j.at("epsilon_schedule"));
    }
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    return c;
  }
  if (kind == "sgld") {
    SgldConfig<double> c;
    c.minibatch = j.at("n").get<Index>();
    c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("preconditioner") && !j.at("preconditioner").is_null()) {
      const auto& p = j.at("preconditioner");
      const Index d = p.at("dim").get<Index>();
      const auto values = p.at("values").get<std::vector<double>>();
      MatrixX<double> m(d, d);
      std::copy(values.begin(), values.end(), m.data());
      c.preconditioner = std::move(m);
    }
    if (j.contains("epsilon_schedule") && !j.at("epsilon_schedule").is_null()) {
      c.epsilon_schedule = schedule_from_json(j.at("epsilon_schedule"));
    }
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    return c;
  }
  if (kind == "sgd") {
    SgdConfig<double> c;
    c.minibatch = j.at("n").get<Index>();
    c.schedule = schedule_from_json(j.at("schedule"));
    if (j.value("with_replacement", false)) c.policy = MinibatchPolicy::with_replacement;
    return c;
  }
  if (kind == "hmc") {
    HmcConfig<double> c;
    c.leapfrog_steps = j.at("leapfrog_steps").get<int>();
    c.step_size = j.at("step_size").get<double>();
    c.target_accept = j.value("target_accept", 0.8);
    c.adapt_iterations = j.value("adapt_iterations", std::int64_t(-1));
    return c;
  }
  throw config_error("sampler spec: unknown kind '" + kind + "'");
}

// --- Fisher estimate and chain state --------------------------------------

inline json to_json(const FisherEstimate<double>& est) {
  json j{{"form", est.form == FisherForm::full ? "full" : "diagonal"}, {"t", est.t}};
  if (est.form == FisherForm::full) {
    // row-major for readability; the matrix is symmetric anyway
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(est.full.size()));
    for (Index r = 0; r < est.full.rows(); ++r) {
      for (Index c = 0; c < est.full.cols(); ++c) values.push_back(est.full(r, c));
    }
    j["dim"] = est.full.rows();
    j["values"] = values;
  } else {
    j["dim"] = est.diag.size();
    j["values"] = std::vector<double>(est.diag.data(), est.diag.data() + est.diag.size());
  }
  return j;
}

inline FisherEstimate<double> fisher_from_json(const json& j) {
  FisherEstimate<double> est;
  est.form = j.at("form").get<std::string>() == "full" ? FisherForm::full : FisherForm::diagonal;
  est.t = j.at("t").get<std::int64_t>();
  const Index d = j.at("dim").get<Index>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (est.form == FisherForm::full) {
    if (static_cast<Index>(values.size()) != d * d) throw config_error("fisher: bad value count");
    est.full.resize(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) est.full(r, c) = values[static_cast<std::size_t>(r * d + c)];
    }
  } else {
    if (static_cast<Index>(values.size()) != d) throw config_error("fisher: bad value count");
    est.diag = Eigen::Map<const VectorX<double>>(values.data(), d);
  }
  return est;
}

//! Everything needed to continue a chain exactly where it stopped.
struct Checkpoint {
  SamplerSpec<double> spec;
  ChainState<double> state;
  RunOptions options;
  std::optional<double> hmc_step_size;  // adapted value, HMC only
};

inline json to_json(const Checkpoint& ck) {
  json j{{"sampler", kind_label(kind_of(ck.spec))},
         {"config", to_json(ck.spec)},
         {"t", ck.state.t},
         {"theta", std::vector<double>(ck.state.theta.data(),
                                       ck.state.theta.data() + ck.state.theta.size())},
         {"fisher", to_json(ck.state.fisher)},
         {"rng", ck.state.rng.state()},
         {"wall_time", ck.state.wall_time},
         {"run", {{"iterations", ck.options.iterations},
                  {"burn_in", ck.options.burn_in},
                  {"thin", ck.options.thin},
                  {"seed", ck.options.seed}}}};
  if (ck.hmc_step_size) j["hmc_step_size"] = *ck.hmc_step_size;
  return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint ck;
  ck.spec = sampler_spec_from_json(j.at("config"));
  ck.state.t = j.at("t").get<std::int64_t>();
  const auto theta = j.at("theta").get<std::vector<double>>();
  ck.state.theta = Eigen::Map<const VectorX<double>>(theta.data(), static_cast<Index>(theta.size()));
  ck.state.fisher = fisher_from_json(j.at("fisher"));
  ck.state.rng.set_state(j.at("rng").get<std::string>());
  ck.state.wall_time = j.value("wall_time", 0.0);
  const auto& run = j.at("run");
  ck.options.iterations = run.at("iterations").get<std::int64_t>();
  ck.options.burn_in = run.at("burn_in").get<std::int64_t>();
  ck.options.thin = run.at("thin").get<std::int64_t>();
  ck.options.seed = run.at("seed").get<std::uint64_t>();
  if (j.contains("hmc_step_size") && !j.at("hmc_step_size").is_null()) {
    ck.hmc_step_size = j.at("hmc_step_size").get<double>();
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("save_checkpoint: cannot open " + path);
  out << to_json(ck).dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("load_checkpoint: cannot open " + path);
  json j;
  in >> j;
  return checkpoint_from_json(j);
}

//! Resumes the checkpointed chain through its configured iteration count.
//! With the same seed and config, the concatenation of the pre-checkpoint
//! trace and this trace is identical to an uninterrupted run.
template <typename Mdl>
Trace<double> resume_chain(const Mdl& model, Checkpoint ck, std::string config_json = "{}") {
  const std::string label = kind_label(kind_of(ck.spec));
  return std::visit(
      [&](const auto& cfg) -> Trace<double> {
        using Cfg = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<Cfg, HmcConfig<double>>) {
          HmcConfig<double> resolved = cfg;
          if (resolved.adapt_iterations < 0) resolved.adapt_iterations = ck.options.burn_in;
          HmcSampler<double, PosteriorTarget<double>> sampler(PosteriorTarget<double>{&model},
                                                              resolved);
          if (ck.hmc_step_size) sampler.set_current_step_size(*ck.hmc_step_size);
          return run_chain_from(sampler, ck.state, ck.options, label, config_json);
        } else {
          auto sampler = [&] {
            if constexpr (std::is_same_v<Cfg, SgfsConfig<double>>) {
              return SgfsSampler<double>(model, cfg);
            } else if constexpr (std::is_same_v<Cfg, SgldConfig<double>>) {
              return SgldSampler<double>(model, cfg);
            } else {
              return SgdSampler<double>(model, cfg);
            }
          }();
          return run_chain_from(sampler, ck.state, ck.options, label, config_json);
        }
      },
      ck.spec);
}

}  // namespace sgmcmc
