#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "oomlearn/approx_basis.hpp"
#include "oomlearn/exact_learner.hpp"
#include "oomlearn/hmm.hpp"
#include "oomlearn/oracle.hpp"
#include "oomlearn/precond.hpp"
#include "oomlearn/sampling_learner.hpp"

namespace oomlearn {

inline constexpr int kReportSchemaVersion = 1;

/// kind ∈ {parity, full_rank, overcomplete, file}; unused fields are ignored.
struct InstanceSpec {
  std::string kind = "parity";
  std::size_t horizon = 6;
  std::set<std::size_t> subset{1};
  double alpha = 0.2;
  std::size_t states = 2;
  int num_obs = 2;
  std::uint64_t seed = 0;
  double sigma_floor = 0.05;
  std::string path;
};

/// Asserted outcomes; absent bounds are not checked.
struct Criteria {
  std::optional<double> max_tv;
  std::optional<std::size_t> max_rounds;
  std::optional<std::uint64_t> max_queries;
  std::optional<double> max_residual;
  double min_pass_fraction = 1.0;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::string algorithm = "exact";  ///< exact | sampling | approx-basis
  ExactLearnerParams exact;
  AlgoParams sampling;
  ApproxBasisParams approx;
  std::size_t basis_t = 1;          ///< history length for approx-basis
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::uint64_t> budget;
  std::size_t workers = 1;          ///< seeds run concurrently, one oracle each
  std::size_t tv_samples = 2000;    ///< per length, when TV cannot be enumerated
  std::string output;               ///< report path; empty = none
  std::string model_output;         ///< "{seed}" is replaced; without it only the first seed is written
  std::string table_output;         ///< CSV path; empty = none
  Criteria criteria;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& config);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

[[nodiscard]] Hmm build_instance(const InstanceSpec& spec);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;  ///< the learner ran to completion
  std::string error;
  std::optional<double> tv;
  std::string tv_kind;  ///< "exact" or "conditional_bound"
  std::size_t rounds = 0;
  std::size_t basis_size = 0;
  std::optional<double> residual;
  OracleStats stats;
  double seconds = 0.0;
  bool passed = false;
};

struct ExperimentReport {
  ExperimentConfig config;
  nlohmann::json diagnostics;
  std::vector<SeedOutcome> outcomes;
  double pass_fraction = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

/// Receives sampling-learner phase records tagged with their seed. With workers > 1
/// it is called from several threads at once.
using SeedPhaseLogger = std::function<void(std::uint64_t seed, const PhaseRecord&)>;

/// Runs every seed and evaluates the criteria; learner failures are recorded per
/// seed rather than thrown. Deterministic given the config apart from timing.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config, const SeedPhaseLogger& logger = {});

[[nodiscard]] nlohmann::json report_to_json(const ExperimentReport& report);
/// Drops every key ending in "seconds", recursively.
[[nodiscard]] nlohmann::json strip_timing(nlohmann::json j);
[[nodiscard]] std::string report_csv(const ExperimentReport& report);
/// Writes the report and table files named by the config.
void write_outputs(const ExperimentReport& report);

}  // namespace oomlearn
