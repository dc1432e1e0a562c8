#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/oom.hpp"
#include "oomlearn/oracle.hpp"

namespace oomlearn {

struct ExactLearnerParams {
  double epsilon = 0.05;
  double delta = 0.1;
  /// Rank guess entering the default sample size; only affects n.
  std::size_t rank_hint = 1;
  /// Joint samples per length; 0 selects ceil(8·log(T·rank_hint/δ)/ε²).
  std::size_t samples_per_length = 0;
  /// |predicted − oracle| above this counts as a disagreement.
  double equality_tol = 1e-9;
  /// 0 selects 64·T.
  std::size_t max_rounds = 0;
};

[[nodiscard]] std::size_t default_sample_size(std::size_t horizon, std::size_t rank_hint, double epsilon,
                                              double delta);

/// Per-t representative histories B_t and test futures Λ_t with cached oracle tables.
/// Invariant after every update: Pr[Λ_t | B_t] is square and invertible.
struct LearnerState {
  int num_obs = 0;
  std::size_t horizon = 0;
  std::vector<Basis> bases;
  std::vector<std::vector<ObsSeq>> tests;
  std::vector<Eigen::MatrixXd> test_values;                  ///< [t] = Pr[Λ_t | B_t]
  std::vector<std::vector<Eigen::MatrixXd>> shifted_values;  ///< [t][o-1] = Pr[oΛ_{t+1} | B_t]
  std::size_t rounds = 0;
  /// Oracle answers keyed by (h, f); repeated questions are not re-asked.
  std::map<std::pair<ObsSeq, ObsSeq>, double> answers;
};

/// Operators indexed [t][o-1].
using OperatorSet = std::vector<std::vector<Eigen::MatrixXd>>;

/// B_0 = {φ}, B_t = {(1,…,1)}; Λ_T = {φ} and Λ_t = {o} for the smallest o with
/// Pr[o | B_t] > 0.
[[nodiscard]] LearnerState init_state(OracleHandle& oracle);

/// Fills any missing table entries through the oracle.
void refresh_tables(LearnerState& state, OracleHandle& oracle);

/// Solves Pr[Λ_{t+1}|B_{t+1}] Â_{o,t} = Pr[oΛ_{t+1}|B_t] (minimum-norm). Throws
/// std::logic_error if a table is singular.
[[nodiscard]] OperatorSet solve_operators(LearnerState& state, OracleHandle& oracle);

/// Pr[Λ_t | B_t] Â_{x_t,t-1} ⋯ Â_{x_1,0}.
[[nodiscard]] Eigen::VectorXd predict_tests(const LearnerState& state, const OperatorSet& ops, const ObsSeq& prefix);

/// Pr[x λ] for every λ ∈ Λ_{|x|}, through the oracle cache.
[[nodiscard]] Eigen::VectorXd oracle_tests(LearnerState& state, OracleHandle& oracle, const ObsSeq& prefix);

/// Draws n joint prefixes for each length t = 1..T (in that order) and returns the
/// first whose predictions disagree with the oracle.
[[nodiscard]] std::optional<ObsSeq> find_counterexample(LearnerState& state, const OperatorSet& ops,
                                                        OracleHandle& oracle, std::size_t n, double tol = 1e-9);

struct CounterexampleUpdate {
  ObsSeq counterexample;
  std::size_t tau = 0;    ///< timestep whose tables grew
  ObsSeq new_history;     ///< b' = x_{1:τ}
  ObsSeq new_test;        ///< λ' = x_{τ+1} λ_{τ+1}
  double determinant = 0; ///< det Pr[Λ_τ | B_τ] after the update
};

/// Locates the first τ with agreeing predictions at τ and disagreeing ones at τ+1,
/// and grows B_τ and Λ_τ. Throws std::invalid_argument if no such τ exists and
/// std::logic_error if the grown table is singular.
CounterexampleUpdate process_counterexample(LearnerState& state, const OperatorSet& ops, OracleHandle& oracle,
                                            const ObsSeq& counterexample, double tol = 1e-9);

struct ExactLearnResult {
  OomModel model;
  TestTables tests;
  LearnerState state;
  std::vector<CounterexampleUpdate> updates;
  std::size_t samples_per_length = 0;
  std::uint64_t queries = 0;
};

/// Counterexample-driven learner over the exact-probability oracle. Throws
/// std::runtime_error if the round count exceeds the cap.
[[nodiscard]] ExactLearnResult learn_exact(OracleHandle& oracle, const ExactLearnerParams& params = {});

[[nodiscard]] TestTables test_tables(const LearnerState& state);

}  // namespace oomlearn
