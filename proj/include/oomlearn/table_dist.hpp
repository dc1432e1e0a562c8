#pragma once

#include <map>

#include "oomlearn/distribution.hpp"

namespace oomlearn {

/// Explicit probability table over all O^T sequences. Conditioning on a history of
/// probability zero raises ZeroProbabilityHistory.
class TableDist final : public SequenceDistribution {
 public:
  /// `probs` indexed by lex_index; must be non-negative and sum to 1 within 1e-9.
  TableDist(int num_obs, std::size_t horizon, std::vector<double> probs, const EnumerationCap& cap = {});

  /// Missing sequences get probability 0.
  [[nodiscard]] static TableDist from_map(int num_obs, std::size_t horizon, const std::map<ObsSeq, double>& probs);

  /// Tabulates any enumerable distribution.
  [[nodiscard]] static TableDist from_distribution(const SequenceDistribution& dist, const EnumerationCap& cap = {});

  [[nodiscard]] int num_obs() const override { return num_obs_; }
  [[nodiscard]] std::size_t horizon() const override { return horizon_; }

  [[nodiscard]] double conditional_prob(const ObsSeq& history, const ObsSeq& future) const override;
  [[nodiscard]] double joint_prob(const ObsSeq& seq) const override;

  /// Pr[x_1..x_k] for a prefix of any length k ≤ T.
  [[nodiscard]] double marginal(const ObsSeq& prefix) const;

 private:
  int num_obs_;
  std::size_t horizon_;
  /// level[k][lex_index(prefix)] = Pr[prefix] for prefixes of length k.
  std::vector<std::vector<double>> levels_;
};

}  // namespace oomlearn
