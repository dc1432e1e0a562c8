#include "oomlearn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <memory>
#include <sstream>

#include "oomlearn/generators.hpp"
#include "oomlearn/metrics.hpp"
#include "oomlearn/sampling_learner.hpp"

namespace oomlearn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEnumerableSequences = 1u << 20;

template <class T>
void read_opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

bool enumerable(int num_obs, std::size_t horizon) {
  try {
    return count_sequences(num_obs, horizon) <= kEnumerableSequences;
  } catch (const std::overflow_error&) {
    return false;
  }
}

std::string replace_seed(std::string path, std::uint64_t seed) {
  const auto pos = path.find("{seed}");
  if (pos != std::string::npos) path.replace(pos, 6, std::to_string(seed));
  return path;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (algorithm != "exact" && algorithm != "sampling" && algorithm != "approx-basis") {
    throw std::invalid_argument("config: algorithm must be exact, sampling or approx-basis");
  }
  if (instance.kind != "parity" && instance.kind != "full_rank" && instance.kind != "overcomplete" &&
      instance.kind != "file") {
    throw std::invalid_argument("config: unknown instance kind '" + instance.kind + "'");
  }
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  if (workers == 0 || tv_samples == 0) throw std::invalid_argument("config: workers and tv_samples must be positive");
  if (criteria.min_pass_fraction < 0.0 || criteria.min_pass_fraction > 1.0) {
    throw std::invalid_argument("config: min_pass_fraction must lie in [0, 1]");
  }
  if (algorithm == "sampling") sampling.validate();
  if (algorithm == "approx-basis") {
    approx.validate();
    if (basis_t > instance.horizon && instance.kind != "file") throw std::invalid_argument("config: basis_t exceeds T");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("instance")) {
    const json& i = j.at("instance");
    read_opt(i, "kind", c.instance.kind);
    read_opt(i, "T", c.instance.horizon);
    if (i.contains("I")) c.instance.subset = i.at("I").get<std::set<std::size_t>>();
    read_opt(i, "alpha", c.instance.alpha);
    read_opt(i, "S", c.instance.states);
    read_opt(i, "O", c.instance.num_obs);
    read_opt(i, "seed", c.instance.seed);
    read_opt(i, "sigma_floor", c.instance.sigma_floor);
    read_opt(i, "path", c.instance.path);
  }
  read_opt(j, "algorithm", c.algorithm);
  if (j.contains("exact")) {
    const json& e = j.at("exact");
    read_opt(e, "epsilon", c.exact.epsilon);
    read_opt(e, "delta", c.exact.delta);
    read_opt(e, "rank_hint", c.exact.rank_hint);
    read_opt(e, "samples_per_length", c.exact.samples_per_length);
    read_opt(e, "equality_tol", c.exact.equality_tol);
    read_opt(e, "max_rounds", c.exact.max_rounds);
  }
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    read_opt(s, "n", c.sampling.n);
    read_opt(s, "m", c.sampling.m);
    read_opt(s, "eigen_threshold", c.sampling.eigen_threshold);
    read_opt(s, "ridge", c.sampling.ridge);
    read_opt(s, "regularity", c.sampling.regularity);
    read_opt(s, "rel_accuracy", c.sampling.rel_accuracy);
    read_opt(s, "epsilon", c.sampling.epsilon);
    read_opt(s, "delta", c.sampling.delta);
    read_opt(s, "coef_bound", c.sampling.coef_bound);
    read_opt(s, "speed_factor", c.sampling.speed_factor);
    read_opt(s, "relative_samples", c.sampling.relative_samples);
    read_opt(s, "test_samples", c.sampling.test_samples);
    read_opt(s, "one_step_samples", c.sampling.one_step_samples);
    read_opt(s, "repeat", c.sampling.repeat);
  }
  if (j.contains("approx_basis")) {
    const json& a = j.at("approx_basis");
    read_opt(a, "t", c.basis_t);
    read_opt(a, "epsilon", c.approx.epsilon);
    read_opt(a, "delta", c.approx.delta);
    read_opt(a, "alpha", c.approx.alpha);
    read_opt(a, "rank_bound", c.approx.rank_bound);
    read_opt(a, "histories_per_round", c.approx.histories_per_round);
    read_opt(a, "futures_per_loss", c.approx.futures_per_loss);
    read_opt(a, "relative_samples", c.approx.relative_samples);
    read_opt(a, "rel_accuracy", c.approx.rel_accuracy);
    read_opt(a, "max_rounds", c.approx.max_rounds);
  }
  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("seed")) {
    c.seeds = {j.at("seed").get<std::uint64_t>()};
  }
  if (j.contains("num_seeds")) {
    const auto first = c.seeds.front();
    const auto count = j.at("num_seeds").get<std::size_t>();
    c.seeds.clear();
    for (std::size_t k = 0; k < count; ++k) c.seeds.push_back(first + k);
  }
  read_opt(j, "budget", c.budget);
  read_opt(j, "workers", c.workers);
  read_opt(j, "tv_samples", c.tv_samples);
  read_opt(j, "output", c.output);
  read_opt(j, "model_output", c.model_output);
  read_opt(j, "table_output", c.table_output);
  if (j.contains("criteria")) {
    const json& k = j.at("criteria");
    read_opt(k, "max_tv", c.criteria.max_tv);
    read_opt(k, "max_rounds", c.criteria.max_rounds);
    read_opt(k, "max_queries", c.criteria.max_queries);
    read_opt(k, "max_residual", c.criteria.max_residual);
    read_opt(k, "min_pass_fraction", c.criteria.min_pass_fraction);
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["instance"] = {{"kind", c.instance.kind},   {"T", c.instance.horizon},         {"I", c.instance.subset},
                   {"alpha", c.instance.alpha}, {"S", c.instance.states},          {"O", c.instance.num_obs},
                   {"seed", c.instance.seed},   {"sigma_floor", c.instance.sigma_floor}, {"path", c.instance.path}};
  j["algorithm"] = c.algorithm;
  j["exact"] = {{"epsilon", c.exact.epsilon},
                {"delta", c.exact.delta},
                {"rank_hint", c.exact.rank_hint},
                {"samples_per_length", c.exact.samples_per_length},
                {"equality_tol", c.exact.equality_tol},
                {"max_rounds", c.exact.max_rounds}};
  j["sampling"] = {{"n", c.sampling.n},
                   {"m", c.sampling.m},
                   {"eigen_threshold", c.sampling.eigen_threshold},
                   {"ridge", c.sampling.ridge},
                   {"regularity", c.sampling.regularity},
                   {"rel_accuracy", c.sampling.rel_accuracy},
                   {"epsilon", c.sampling.epsilon},
                   {"delta", c.sampling.delta},
                   {"coef_bound", c.sampling.coef_bound},
                   {"speed_factor", c.sampling.speed_factor},
                   {"relative_samples", c.sampling.relative_samples},
                   {"test_samples", c.sampling.test_samples},
                   {"one_step_samples", c.sampling.one_step_samples},
                   {"repeat", c.sampling.repeat}};
  j["approx_basis"] = {{"t", c.basis_t},
                       {"epsilon", c.approx.epsilon},
                       {"delta", c.approx.delta},
                       {"alpha", c.approx.alpha},
                       {"rank_bound", c.approx.rank_bound},
                       {"histories_per_round", c.approx.histories_per_round},
                       {"futures_per_loss", c.approx.futures_per_loss},
                       {"relative_samples", c.approx.relative_samples},
                       {"rel_accuracy", c.approx.rel_accuracy},
                       {"max_rounds", c.approx.max_rounds}};
  j["seeds"] = c.seeds;
  j["budget"] = opt_json(c.budget);
  j["workers"] = c.workers;
  j["tv_samples"] = c.tv_samples;
  j["output"] = c.output;
  j["model_output"] = c.model_output;
  j["table_output"] = c.table_output;
  j["criteria"] = {{"max_tv", opt_json(c.criteria.max_tv)},
                   {"max_rounds", opt_json(c.criteria.max_rounds)},
                   {"max_queries", opt_json(c.criteria.max_queries)},
                   {"max_residual", opt_json(c.criteria.max_residual)},
                   {"min_pass_fraction", c.criteria.min_pass_fraction}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return config_from_json(json::parse(in));
}

Hmm build_instance(const InstanceSpec& spec) {
  if (spec.kind == "parity") return make_parity_hmm(spec.horizon, spec.subset, spec.alpha);
  if (spec.kind == "full_rank") {
    return make_full_rank_hmm(spec.states, spec.num_obs, spec.horizon, spec.seed, spec.sigma_floor);
  }
  if (spec.kind == "overcomplete") return make_overcomplete_hmm(spec.states, spec.num_obs, spec.horizon, spec.seed);
  if (spec.kind == "file") return load_hmm(spec.path);
  throw std::invalid_argument("unknown instance kind '" + spec.kind + "'");
}

namespace {

json instance_diagnostics(const ExperimentConfig& config, const Hmm& hmm) {
  json d;
  d["S"] = hmm.initial().size();
  d["O"] = hmm.num_obs();
  d["T"] = hmm.horizon();
  d["enumerable"] = enumerable(hmm.num_obs(), hmm.horizon());
  if (hmm.horizon() <= 12 && enumerable(hmm.num_obs(), hmm.horizon())) {
    d["rank"] = rank_of(hmm);
    if (config.instance.kind == "parity") {
      const auto bases = parity_class_bases(hmm.horizon(), config.instance.subset);
      const auto fid = fidelity_for_bases(hmm, bases);
      d["parity_fidelity"] = fid.min_sigma_plus;
      d["parity_max_basis_size"] = fid.max_basis_size;
      d["parity_robust_sigma"] = robust_sigma(hmm, bases);
    }
  }
  return d;
}

/// Runs the learner for one seed and scores it; the model is written when asked.
SeedOutcome run_seed(const ExperimentConfig& config, const std::shared_ptr<const Hmm>& hmm, std::uint64_t seed,
                     bool write_model, const SeedPhaseLogger& logger) {
  SeedOutcome out;
  out.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const bool exact_tv = enumerable(hmm->num_obs(), hmm->horizon());
  auto score = [&](const SequenceDistribution& learned) {
    if (exact_tv) {
      out.tv = tv_exact(*hmm, learned);
      out.tv_kind = "exact";
    } else {
      Rng rng(seed, 0x7e57);
      out.tv = tv_conditional_bound(*hmm, learned, config.tv_samples, rng);
      out.tv_kind = "conditional_bound";
    }
  };
  const std::string model_path =
      write_model && !config.model_output.empty() ? replace_seed(config.model_output, seed) : std::string{};
  const OracleMode mode = config.algorithm == "exact" ? OracleMode::ExactProbability : OracleMode::ConditionalSampling;
  OracleHandle oracle(hmm, mode, seed, config.budget);
  try {
    if (config.algorithm == "exact") {
      auto result = learn_exact(oracle, config.exact);
      out.rounds = result.updates.size();
      out.basis_size = 0;
      for (const auto& b : result.model.bases()) out.basis_size = std::max(out.basis_size, b.size());
      if (!model_path.empty()) save_model(model_path, result.model);
      score(to_distribution(result.model, result.tests));
    } else if (config.algorithm == "sampling") {
      AlgoParams params = config.sampling;
      params.seed = seed;
      PhaseLogger phase_logger;
      if (logger) phase_logger = [&logger, seed](const PhaseRecord& r) { logger(seed, r); };
      auto result = learn_sampling(oracle, params, phase_logger);
      out.rounds = hmm->horizon();
      for (const auto& b : result.model.bases()) out.basis_size = std::max(out.basis_size, b.size());
      if (!model_path.empty()) save_model(model_path, result.model);
      score(to_distribution(result.model));
    } else {
      ApproxBasisParams params = config.approx;
      params.seed = seed;
      auto result = find_approx_basis(oracle, config.basis_t, params);
      out.rounds = result.rounds;
      out.basis_size = result.core.size();
      if (exact_tv) out.residual = expected_l1_residual(*hmm, result.core, result.cap);
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.stats = oracle.stats();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Criteria& k = config.criteria;
  out.passed = out.ok;
  if (k.max_tv) out.passed = out.passed && out.tv && *out.tv <= *k.max_tv;
  if (k.max_rounds) out.passed = out.passed && out.rounds <= *k.max_rounds;
  if (k.max_queries) out.passed = out.passed && out.stats.total <= *k.max_queries;
  if (k.max_residual) out.passed = out.passed && out.residual && *out.residual <= *k.max_residual;
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const SeedPhaseLogger& logger) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  const auto hmm = std::make_shared<const Hmm>(build_instance(config.instance));
  report.diagnostics = instance_diagnostics(config, *hmm);

  const bool per_seed_models = config.model_output.find("{seed}") != std::string::npos;
  report.outcomes.resize(config.seeds.size());
  for (std::size_t begin = 0; begin < config.seeds.size(); begin += config.workers) {
    const std::size_t end = std::min(config.seeds.size(), begin + config.workers);
    std::vector<std::future<SeedOutcome>> running;
    for (std::size_t i = begin; i < end; ++i) {
      const bool write = per_seed_models || i == 0;
      running.push_back(std::async(config.workers > 1 ? std::launch::async : std::launch::deferred,
                                   [&config, &hmm, &logger, i, write] {
                                     return run_seed(config, hmm, config.seeds[i], write, logger);
                                   }));
    }
    for (std::size_t i = begin; i < end; ++i) report.outcomes[i] = running[i - begin].get();
  }

  std::size_t passed = 0;
  for (const auto& o : report.outcomes) passed += o.passed ? 1 : 0;
  report.pass_fraction = static_cast<double>(passed) / static_cast<double>(report.outcomes.size());
  report.passed = report.pass_fraction >= config.criteria.min_pass_fraction;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(report);
  return report;
}

json report_to_json(const ExperimentReport& report) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = config_to_json(report.config);
  j["diagnostics"] = report.diagnostics;
  json seeds = json::array();
  for (const auto& o : report.outcomes) {
    seeds.push_back({{"seed", o.seed},
                     {"ok", o.ok},
                     {"error", o.error},
                     {"tv", opt_json(o.tv)},
                     {"tv_kind", o.tv_kind},
                     {"rounds", o.rounds},
                     {"basis_size", o.basis_size},
                     {"residual", opt_json(o.residual)},
                     {"queries",
                      {{"total", o.stats.total},
                       {"joint_samples", o.stats.joint_samples},
                       {"by_history_length", o.stats.by_history_length}}},
                     {"wall_seconds", o.seconds},
                     {"passed", o.passed}});
  }
  j["per_seed"] = std::move(seeds);
  j["summary"] = {{"pass_fraction", report.pass_fraction}, {"passed", report.passed}, {"wall_seconds", report.seconds}};
  return j;
}

json strip_timing(json j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key.size() >= 7 && key.compare(key.size() - 7, 7, "seconds") == 0) continue;
      out[key] = strip_timing(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "seed,ok,passed,tv,tv_kind,rounds,basis_size,residual,queries,wall_seconds\n";
  for (const auto& o : report.outcomes) {
    out << o.seed << ',' << o.ok << ',' << o.passed << ',';
    if (o.tv) out << *o.tv;
    out << ',' << o.tv_kind << ',' << o.rounds << ',' << o.basis_size << ',';
    if (o.residual) out << *o.residual;
    out << ',' << o.stats.total << ',' << o.seconds << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentReport& report) {
  if (!report.config.output.empty()) {
    std::ofstream out(report.config.output);
    if (!out) throw std::runtime_error("cannot write report '" + report.config.output + "'");
    out << std::setw(2) << report_to_json(report) << '\n';
  }
  if (!report.config.table_output.empty()) {
    std::ofstream out(report.config.table_output);
    if (!out) throw std::runtime_error("cannot write table '" + report.config.table_output + "'");
    out << report_csv(report);
  }
}

}  // namespace oomlearn
