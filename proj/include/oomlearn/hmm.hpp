#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "oomlearn/distribution.hpp"

namespace oomlearn {

/// Posterior over the next hidden state given a history.
struct BeliefState {
  Eigen::VectorXd probs;
};

struct FilterResult {
  BeliefState belief;
  double log_prob = 0.0;  ///< log Pr[history]; -inf when the history is impossible
};

/// Time-homogeneous HMM over a finite horizon. Emission is O×S and transition is
/// S×S, both column-stochastic: emission(o-1, s) = Pr[o | s], transition(s', s) = Pr[s' | s].
///
/// Impossible histories: when an observation has probability zero under the current
/// belief, the belief is reset to uniform over the next hidden state and filtering
/// continues from there. Conditionals therefore satisfy Pr[of|h] = Pr[o|h]·Pr[f|ho]
/// whenever Pr[o|h] > 0, including histories of probability zero.
class Hmm final : public SequenceDistribution {
 public:
  Hmm(Eigen::VectorXd initial, Eigen::MatrixXd emission, Eigen::MatrixXd transition, std::size_t horizon);

  [[nodiscard]] int num_obs() const override { return static_cast<int>(emission_.rows()); }
  [[nodiscard]] std::size_t horizon() const override { return horizon_; }
  [[nodiscard]] int num_states() const { return static_cast<int>(initial_.size()); }

  [[nodiscard]] const Eigen::VectorXd& initial() const noexcept { return initial_; }
  [[nodiscard]] const Eigen::MatrixXd& emission() const noexcept { return emission_; }
  [[nodiscard]] const Eigen::MatrixXd& transition() const noexcept { return transition_; }

  [[nodiscard]] FilterResult filter(const ObsSeq& history) const;

  [[nodiscard]] double conditional_prob(const ObsSeq& history, const ObsSeq& future) const override;
  [[nodiscard]] double joint_prob(const ObsSeq& seq) const override;
  [[nodiscard]] std::vector<double> next_symbol_probs(const ObsSeq& history) const override;
  [[nodiscard]] std::vector<double> conditional_probs(const ObsSeq& history,
                                                      std::span<const ObsSeq> futures) const override;
  [[nodiscard]] ObsSeq sample_conditional(const ObsSeq& history, Rng& rng) const override;
  [[nodiscard]] std::vector<ObsSeq> sample_conditional_batch(const ObsSeq& history, std::size_t count,
                                                             Rng& rng) const override;

  /// Probability of `future` when the next hidden state is distributed as `belief`.
  [[nodiscard]] double future_prob(const Eigen::VectorXd& belief, const ObsSeq& future) const;

  /// Same model with a different horizon.
  [[nodiscard]] Hmm with_horizon(std::size_t horizon) const;

 private:
  /// Bayes update of a normalized belief by one observation; returns Pr[o | belief].
  double advance(Eigen::VectorXd& belief, Symbol o) const;
  ObsSeq draw_future(const Eigen::VectorXd& belief, std::size_t length, Rng& rng) const;

  Eigen::VectorXd initial_;
  Eigen::MatrixXd emission_;
  Eigen::MatrixXd transition_;
  std::size_t horizon_;
};

/// JSON text with fields S, O, T, mu, emission (O rows), transition (S rows).
/// Doubles are written with enough digits to round-trip exactly.
void write_hmm(std::ostream& out, const Hmm& hmm);
[[nodiscard]] Hmm read_hmm(std::istream& in);
void save_hmm(const std::string& path, const Hmm& hmm);
[[nodiscard]] Hmm load_hmm(const std::string& path);

}  // namespace oomlearn
