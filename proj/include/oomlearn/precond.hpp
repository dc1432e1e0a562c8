#pragma once

#include <map>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/oom.hpp"
#include "oomlearn/oracle.hpp"

namespace oomlearn {

/// Tuning of the sampling learner. Sample schedules follow the concentration
/// bounds and are divided by speed_factor; explicit per-step counts override them.
struct AlgoParams {
  std::size_t n = 20;              ///< histories drawn per basis
  std::size_t m = 10000;           ///< futures sampled per estimated entry
  double eigen_threshold = 0.05;   ///< keep eigenvalues above half of this
  double ridge = 1e-4;
  double regularity = 0.05;        ///< one-step probabilities at or below 2× this fail test A
  double rel_accuracy = 0.1;       ///< target relative error of conditional estimates
  double epsilon = 0.05;
  double delta = 0.1;
  double coef_bound = 1.0;         ///< assumed bound on coefficient norms
  std::uint64_t seed = 0;
  double speed_factor = 1.0;
  std::size_t relative_samples = 0;  ///< per step of a relative estimate; 0 = schedule
  std::size_t test_samples = 0;      ///< per step of test A; 0 = schedule
  std::size_t one_step_samples = 0;  ///< per history for Pr[o|b]; 0 = m
  std::size_t repeat = 1;            ///< copies of each drawn basis member

  /// Throws std::invalid_argument unless every field is in range.
  void validate() const;
  [[nodiscard]] std::size_t relative_schedule(std::size_t future_length) const;
  [[nodiscard]] std::size_t test_schedule(std::size_t horizon) const;
  [[nodiscard]] std::size_t one_step_count() const { return one_step_samples ? one_step_samples : m; }
};

struct RegularityResult {
  bool pass = true;
  std::vector<double> step_estimates;  ///< empirical Pr[f_τ | b f_{<τ}] up to the first failure
};

/// Test A: every empirical one-step conditional along f must exceed 2α.
[[nodiscard]] RegularityResult regularity_test(OracleHandle& oracle, const ObsSeq& future, const ObsSeq& history,
                                               double alpha, std::size_t samples_per_step, Rng& stream);

/// Product of per-step empirical conditionals, each from `samples_per_step` draws.
[[nodiscard]] double estimate_relative_cond_prob(OracleHandle& oracle, const ObsSeq& history, const ObsSeq& future,
                                                 std::size_t samples_per_step, Rng& stream);

/// Empirical Pr[o | b] for each b (rows) and o (columns) from `samples` draws each.
[[nodiscard]] Eigen::MatrixXd estimate_one_step(OracleHandle& oracle, const Basis& basis, std::size_t samples,
                                                Rng& stream);

/// Estimates s(b*, x) = Σ_f Pr[f|b*] Pr[f|x] / d(f) with d(f) the basis average of
/// Pr[f|b]. Futures are drawn from Pr[·|x]; for each distinct future and basis member
/// test A runs once and, if it passes, a relative estimate of Pr[f|b] is formed.
/// Futures whose mixture estimate is 0 contribute nothing. All draws use streams
/// forked from the constructor's stream by the sequences involved, so results do
/// not depend on evaluation order.
class PrecondEstimator {
 public:
  PrecondEstimator(OracleHandle& oracle, Basis basis, const AlgoParams& params, Rng stream);

  /// ŝ(b_i, x) for every basis member b_i.
  [[nodiscard]] Eigen::VectorXd column(const ObsSeq& x);
  /// ŝ(b*, x); b* must be a basis member.
  [[nodiscard]] double entry(const ObsSeq& b_star, const ObsSeq& x);
  /// Estimated Pr[f | b], 0 when test A rejects.
  [[nodiscard]] double screened_estimate(const ObsSeq& b, const ObsSeq& f);

 private:
  OracleHandle& oracle_;
  Basis basis_;
  AlgoParams params_;
  Rng stream_;
  std::size_t horizon_;
  std::map<std::pair<ObsSeq, ObsSeq>, double> estimates_;
  std::map<ObsSeq, Eigen::VectorXd> columns_;
};

[[nodiscard]] double estimate_precond_sum(OracleHandle& oracle, const ObsSeq& b_star, const ObsSeq& x,
                                          const Basis& basis, const AlgoParams& params, Rng stream);

/// Σ̂ for B_t, q̂(b'o) for b' ∈ B_{t-1}, and one-step estimates for B_{t-1}.
struct PrecondEstimates {
  Eigen::MatrixXd sigma;                ///< |B_t| × |B_t|, symmetrized
  std::vector<Eigen::MatrixXd> q;       ///< [o-1]: column i = q̂(b'_i o)
  Eigen::MatrixXd one_step;             ///< |B_{t-1}| × O
};

[[nodiscard]] PrecondEstimates estimate_sigma_and_q(OracleHandle& oracle, const Basis& basis,
                                                    const Basis& previous, const AlgoParams& params, Rng stream);

/// Exact Σ_B and q(b'o) by enumeration, for diagnostics and tests.
[[nodiscard]] Eigen::MatrixXd exact_sigma(const SequenceDistribution& dist, const Basis& basis);
[[nodiscard]] Eigen::VectorXd exact_q(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& x);

}  // namespace oomlearn
