// Command-line front end: every learner subcommand builds an ExperimentConfig from an
// optional JSON file, applies flag overrides as a JSON merge patch, and runs it.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oomlearn/experiment.hpp"
#include "oomlearn/generators.hpp"
#include "oomlearn/metrics.hpp"

using nlohmann::json;
using namespace oomlearn;

namespace {

/// Flags registered against JSON pointers; only flags given on the command line
/// end up in the patch.
class Overrides {
 public:
  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help + "  [" + pointer + "]");
    apply_.push_back([opt, value, pointer](json& patch) {
      if (opt->count() > 0) patch[json::json_pointer(pointer)] = *value;
    });
  }

  [[nodiscard]] json patch() const {
    json p = json::object();
    for (const auto& f : apply_) f(p);
    return p;
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

void add_instance_flags(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "--kind", "/instance/kind", "parity | full_rank | overcomplete | file");
  o.add<std::size_t>(app, "--T", "/instance/T", "horizon");
  o.add<std::vector<std::size_t>>(app, "--I", "/instance/I", "parity subset, 1-based");
  o.add<double>(app, "--alpha", "/instance/alpha", "parity noise");
  o.add<std::size_t>(app, "--S", "/instance/S", "hidden states");
  o.add<int>(app, "--O", "/instance/O", "observations");
  o.add<std::uint64_t>(app, "--instance-seed", "/instance/seed", "generator seed");
  o.add<double>(app, "--sigma-floor", "/instance/sigma_floor", "full_rank singular value floor");
  o.add<std::string>(app, "--hmm", "/instance/path", "HMM file for kind=file");
}

void add_run_flags(CLI::App* app, Overrides& o) {
  o.add<std::vector<std::uint64_t>>(app, "--seeds", "/seeds", "learner seeds");
  o.add<std::size_t>(app, "--num-seeds", "/num_seeds", "use seeds 0..k-1");
  o.add<std::uint64_t>(app, "--budget", "/budget", "oracle query budget");
  o.add<std::size_t>(app, "--workers", "/workers", "seeds run concurrently");
  o.add<std::size_t>(app, "--tv-samples", "/tv_samples", "per-length draws when TV is not enumerable");
  o.add<std::string>(app, "--output", "/output", "report JSON path");
  o.add<std::string>(app, "--model-output", "/model_output", "model path; {seed} is substituted");
  o.add<std::string>(app, "--table-output", "/table_output", "CSV path");
  o.add<double>(app, "--max-tv", "/criteria/max_tv", "criterion");
  o.add<std::size_t>(app, "--max-rounds-criterion", "/criteria/max_rounds", "criterion");
  o.add<std::uint64_t>(app, "--max-queries", "/criteria/max_queries", "criterion");
  o.add<double>(app, "--max-residual", "/criteria/max_residual", "criterion");
  o.add<double>(app, "--min-pass-fraction", "/criteria/min_pass_fraction", "criterion");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return json::parse(in);
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  Overrides overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON experiment config");
  app->add_option("--seed", c.seed, "single learner seed; overrides the config");
}

ExperimentConfig resolve(const Common& c, const std::string& algorithm) {
  json j = c.config_path.empty() ? json::object() : read_json_file(c.config_path);
  j.merge_patch(c.overrides.patch());
  if (!algorithm.empty()) j["algorithm"] = algorithm;
  if (c.seed) {
    j.erase("seeds");
    j.erase("num_seeds");
    j["seed"] = *c.seed;
  }
  ExperimentConfig config = config_from_json(j);
  config.validate();
  return config;
}

int run_learner(const Common& c, const std::string& algorithm) {
  const ExperimentConfig config = resolve(c, algorithm);
  std::mutex log_mutex;
  const SeedPhaseLogger logger = [&log_mutex](std::uint64_t seed, const PhaseRecord& r) {
    json line{{"seed", seed}, {"t", r.t}, {"phase", r.phase}, {"queries", r.queries}, {"seconds", r.seconds}};
    if (!r.spectrum.empty()) line["spectrum"] = r.spectrum;
    if (r.phase == "draw_basis" || r.phase == "eigenspace") line["kept"] = r.kept;
    const std::lock_guard lock(log_mutex);
    std::cerr << line.dump() << '\n';
  };
  const ExperimentReport report = run_experiment(config, logger);
  json summary = report_to_json(report);
  summary.erase("config");
  std::cout << summary.dump(2) << '\n';
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning sequence distributions with conditional queries"};
  app.require_subcommand(1);

  Common generate;
  std::string hmm_out;
  auto* gen = app.add_subcommand("generate", "write an instance HMM as JSON");
  add_common(gen, generate);
  add_instance_flags(gen, generate.overrides);
  gen->add_option("--out", hmm_out, "destination; stdout when omitted");

  Common exact;
  auto* learn_exact_cmd = app.add_subcommand("learn-exact", "counterexample learner with exact queries");
  add_common(learn_exact_cmd, exact);
  add_instance_flags(learn_exact_cmd, exact.overrides);
  add_run_flags(learn_exact_cmd, exact.overrides);
  exact.overrides.add<double>(learn_exact_cmd, "--epsilon", "/exact/epsilon", "target accuracy");
  exact.overrides.add<double>(learn_exact_cmd, "--delta", "/exact/delta", "failure probability");
  exact.overrides.add<std::size_t>(learn_exact_cmd, "--rank-hint", "/exact/rank_hint", "rank guess for n");
  exact.overrides.add<std::size_t>(learn_exact_cmd, "--n", "/exact/samples_per_length", "joint samples per length");
  exact.overrides.add<double>(learn_exact_cmd, "--equality-tol", "/exact/equality_tol", "disagreement threshold");
  exact.overrides.add<std::size_t>(learn_exact_cmd, "--max-rounds", "/exact/max_rounds", "round cap");

  Common sampling;
  auto* learn_sampling_cmd = app.add_subcommand("learn-sampling", "preconditioned learner with sampling queries");
  add_common(learn_sampling_cmd, sampling);
  add_instance_flags(learn_sampling_cmd, sampling.overrides);
  add_run_flags(learn_sampling_cmd, sampling.overrides);
  auto& so = sampling.overrides;
  so.add<std::size_t>(learn_sampling_cmd, "--n", "/sampling/n", "histories per basis");
  so.add<std::size_t>(learn_sampling_cmd, "--m", "/sampling/m", "futures per entry");
  so.add<double>(learn_sampling_cmd, "--eigen-threshold", "/sampling/eigen_threshold", "Δ");
  so.add<double>(learn_sampling_cmd, "--ridge", "/sampling/ridge", "λ");
  so.add<double>(learn_sampling_cmd, "--regularity", "/sampling/regularity", "α for test A");
  so.add<double>(learn_sampling_cmd, "--rel-accuracy", "/sampling/rel_accuracy", "γ");
  so.add<double>(learn_sampling_cmd, "--epsilon", "/sampling/epsilon", "target accuracy");
  so.add<double>(learn_sampling_cmd, "--delta", "/sampling/delta", "failure probability");
  so.add<double>(learn_sampling_cmd, "--coef-bound", "/sampling/coef_bound", "c");
  so.add<double>(learn_sampling_cmd, "--speed-factor", "/sampling/speed_factor", "divides scheduled sample counts");
  so.add<std::size_t>(learn_sampling_cmd, "--relative-samples", "/sampling/relative_samples", "per step");
  so.add<std::size_t>(learn_sampling_cmd, "--test-samples", "/sampling/test_samples", "per step of test A");
  so.add<std::size_t>(learn_sampling_cmd, "--one-step-samples", "/sampling/one_step_samples", "per history");
  so.add<std::size_t>(learn_sampling_cmd, "--repeat", "/sampling/repeat", "copies of each basis member");

  Common approx;
  auto* find_basis_cmd = app.add_subcommand("find-basis", "approximate basis search at one t");
  add_common(find_basis_cmd, approx);
  add_instance_flags(find_basis_cmd, approx.overrides);
  add_run_flags(find_basis_cmd, approx.overrides);
  auto& ao = approx.overrides;
  ao.add<std::size_t>(find_basis_cmd, "--t", "/approx_basis/t", "history length");
  ao.add<double>(find_basis_cmd, "--epsilon", "/approx_basis/epsilon", "target ℓ1 residual");
  ao.add<double>(find_basis_cmd, "--delta", "/approx_basis/delta", "failure probability");
  ao.add<double>(find_basis_cmd, "--regularity", "/approx_basis/alpha", "one-step lower bound α");
  ao.add<std::size_t>(find_basis_cmd, "--rank-bound", "/approx_basis/rank_bound", "r");
  ao.add<std::size_t>(find_basis_cmd, "--histories-per-round", "/approx_basis/histories_per_round", "candidates");
  ao.add<std::size_t>(find_basis_cmd, "--futures-per-loss", "/approx_basis/futures_per_loss", "m");
  ao.add<std::size_t>(find_basis_cmd, "--relative-samples", "/approx_basis/relative_samples", "per step");
  ao.add<double>(find_basis_cmd, "--rel-accuracy", "/approx_basis/rel_accuracy", "γ");
  ao.add<std::size_t>(find_basis_cmd, "--max-rounds", "/approx_basis/max_rounds", "round cap");

  Common eval;
  std::string model_path;
  bool raw_only = false;
  auto* eval_cmd = app.add_subcommand("eval", "TV between an instance and a saved model");
  add_common(eval_cmd, eval);
  add_instance_flags(eval_cmd, eval.overrides);
  eval_cmd->add_option("--model", model_path, "model JSON")->required();
  eval_cmd->add_flag("--raw", raw_only, "skip the normalized distribution");

  Common fidelity;
  std::string bases_kind = "greedy";
  auto* fidelity_cmd = app.add_subcommand("fidelity", "fidelity and robustness diagnostics");
  add_common(fidelity_cmd, fidelity);
  add_instance_flags(fidelity_cmd, fidelity.overrides);
  fidelity_cmd->add_option("--bases", bases_kind, "greedy | parity")->check(CLI::IsMember({"greedy", "parity"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Hmm hmm = build_instance(resolve(generate, "").instance);
      if (hmm_out.empty()) {
        write_hmm(std::cout, hmm);
      } else {
        save_hmm(hmm_out, hmm);
      }
      return 0;
    }
    if (*learn_exact_cmd) return run_learner(exact, "exact");
    if (*learn_sampling_cmd) return run_learner(sampling, "sampling");
    if (*find_basis_cmd) return run_learner(approx, "approx-basis");
    if (*eval_cmd) {
      const Hmm hmm = build_instance(resolve(eval, "").instance);
      const OomModel model = load_model(model_path);
      json out{{"tv_raw", tv_exact(hmm, model)}};
      if (!raw_only) out["tv_normalized"] = tv_exact(hmm, to_distribution(model));
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*fidelity_cmd) {
      const ExperimentConfig config = resolve(fidelity, "");
      const Hmm hmm = build_instance(config.instance);
      const auto bases = bases_kind == "parity" ? parity_class_bases(hmm.horizon(), config.instance.subset)
                                                : greedy_bases(hmm);
      const FidelityReport report = fidelity_for_bases(hmm, bases);
      json levels = json::array();
      for (const auto& l : report.levels) {
        levels.push_back({{"t", l.t}, {"basis_size", l.basis_size}, {"sigma_plus", l.sigma_plus},
                          {"spectrum", l.spectrum}});
      }
      std::cout << json{{"bases", bases_kind},
                        {"rank", rank_of(hmm)},
                        {"min_sigma_plus", report.min_sigma_plus},
                        {"max_basis_size", report.max_basis_size},
                        {"robust_sigma", robust_sigma(hmm, bases)},
                        {"levels", levels}}
                       .dump(2)
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
