#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/distribution.hpp"

namespace oomlearn {

/// Representative histories at one timestep; all members have length t.
struct Basis {
  std::size_t t = 0;
  std::vector<ObsSeq> members;  ///< duplicates allowed

  [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
  /// Throws if a member has the wrong length.
  void validate() const;
};

/// Coefficients β(h) expressing Pr[F_t | h] in terms of Pr[F_t | B_t].
using Coefficients = Eigen::VectorXd;

/// {φ}.
[[nodiscard]] Basis initial_basis();
/// {(1,…,1)}: the lexicographically smallest length-T sequence.
[[nodiscard]] Basis terminal_basis(std::size_t horizon);

/// Observable-operator model: bases B_0..B_T with |B_0| = |B_T| = 1 and operators
/// A_{o,t} of shape |B_{t+1}| × |B_t| for t < T. Immutable after construction.
class OomModel {
 public:
  /// operators[t][o-1] = A_{o,t}.
  OomModel(int num_obs, std::size_t horizon, std::vector<Basis> bases,
           std::vector<std::vector<Eigen::MatrixXd>> operators);

  [[nodiscard]] int num_obs() const noexcept { return num_obs_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] const Basis& basis(std::size_t t) const { return bases_.at(t); }
  [[nodiscard]] const std::vector<Basis>& bases() const noexcept { return bases_; }
  [[nodiscard]] const Eigen::MatrixXd& op(std::size_t t, Symbol o) const;
  [[nodiscard]] const std::vector<std::vector<Eigen::MatrixXd>>& operators() const noexcept { return operators_; }

 private:
  int num_obs_;
  std::size_t horizon_;
  std::vector<Basis> bases_;
  std::vector<std::vector<Eigen::MatrixXd>> operators_;
};

/// A_{x_t,t-1} ⋯ A_{x_1,0} applied to the unit vector of B_0.
[[nodiscard]] Eigen::VectorXd eval_state(const OomModel& model, const ObsSeq& prefix);

/// Raw iterated product for a length-T sequence; unclamped, may be negative.
[[nodiscard]] double eval_prob(const OomModel& model, const ObsSeq& seq);

/// test_values · eval_state(prefix): predicted joint values for each test future.
/// `test_values` is Pr[Λ_t | B_t] (rows = tests) with t = |prefix|.
[[nodiscard]] Eigen::VectorXd eval_prefix_tests(const OomModel& model, const ObsSeq& prefix,
                                                const Eigen::MatrixXd& test_values);

/// Minimum-norm β(history) with Pr[F_t|B_t] β = Pr[F_t|history], exact-length futures.
[[nodiscard]] Coefficients exact_coefficients(const SequenceDistribution& dist, const Basis& basis,
                                              const ObsSeq& history, double rel_cutoff = 1e-10);

/// A_{o,t} = [β(b_1 o) … β(b_n o)] · diag(Pr[o|b_i]) for every t, o. Throws
/// std::domain_error if Pr[F_{t+1}|B_{t+1}] A_{o,t} misses Pr[oF_{t+1}|B_t] by more
/// than `residual_tol` in max-norm (the bases do not span).
[[nodiscard]] OomModel construct_exact_operators(const SequenceDistribution& dist, std::vector<Basis> bases,
                                                 double residual_tol = 1e-9, const EnumerationCap& cap = {});

/// Greedy spanning bases: histories scanned lexicographically, kept when they raise
/// the rank of Pr[F_t | B_t]. B_0 and B_T are the singleton conventions.
[[nodiscard]] std::vector<Basis> greedy_bases(const SequenceDistribution& dist, double rel_tol = 1e-9,
                                              const EnumerationCap& cap = {});

/// β(ho) = A_{o,t} β(h) / Pr[o|h], t = |h|. Throws std::domain_error when Pr[o|h] = 0.
[[nodiscard]] Coefficients evolve_coefficients(const OomModel& model, std::size_t t, const Coefficients& beta,
                                               Symbol o, double prob_o);

/// Per-t tables Pr[Λ_t | B_t] from a learner that kept test futures. Row
/// anchor_row[t] holds the one-step test z_t used by the binary complement rule.
struct TestTables {
  std::vector<std::vector<ObsSeq>> tests;
  std::vector<Eigen::MatrixXd> values;
  std::vector<std::size_t> anchor_row;
};

/// Proper distribution derived from a raw model's one-step predictions.
///
/// Binary alphabet with tests: p(z_t | x) = clip(P̄[x z_t] / P̂[x]) and the other
/// symbol gets the complement. Otherwise every symbol's prediction P̄[x o] / P̂[x]
/// is clipped to [0, 1] and renormalized, uniform when all clip to 0. Here P̄ is the
/// raw model and P̂ the normalized marginal built so far.
class NormalizedModel final : public SequenceDistribution {
 public:
  explicit NormalizedModel(OomModel model, std::optional<TestTables> tests = std::nullopt);

  [[nodiscard]] int num_obs() const override { return model_.num_obs(); }
  [[nodiscard]] std::size_t horizon() const override { return model_.horizon(); }
  [[nodiscard]] const OomModel& raw() const noexcept { return model_; }

  [[nodiscard]] double conditional_prob(const ObsSeq& history, const ObsSeq& future) const override;
  [[nodiscard]] double joint_prob(const ObsSeq& seq) const override;
  [[nodiscard]] std::vector<double> next_symbol_probs(const ObsSeq& history) const override;
  [[nodiscard]] ObsSeq sample_conditional(const ObsSeq& history, Rng& rng) const override;

 private:
  struct Cursor {
    std::size_t t = 0;
    Eigen::VectorXd state;  ///< raw A-product
    double marginal = 1.0;  ///< normalized P̂[x_1..x_t]
  };
  [[nodiscard]] Cursor start() const;
  [[nodiscard]] std::vector<double> conditionals(const Cursor& c) const;
  void step(Cursor& c, Symbol o, double prob_o) const;
  [[nodiscard]] Cursor walk(const ObsSeq& history) const;

  OomModel model_;
  std::optional<TestTables> tests_;
  /// marginalizers_[t] = Σ over all futures of the raw product, as a row vector on B_t.
  std::vector<Eigen::RowVectorXd> marginalizers_;
};

[[nodiscard]] NormalizedModel to_distribution(OomModel model, std::optional<TestTables> tests = std::nullopt);

/// JSON model file: O, T, basis sizes, basis members, and row-major operator blocks.
void write_model(std::ostream& out, const OomModel& model);
[[nodiscard]] OomModel read_model(std::istream& in);
void save_model(const std::string& path, const OomModel& model);
[[nodiscard]] OomModel load_model(const std::string& path);

}  // namespace oomlearn
