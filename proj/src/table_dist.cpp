#include "oomlearn/table_dist.hpp"

#include <cmath>
#include <string>

namespace oomlearn {

TableDist::TableDist(int num_obs, std::size_t horizon, std::vector<double> probs, const EnumerationCap& cap)
    : num_obs_(num_obs), horizon_(horizon) {
  cap.check(num_obs, horizon);
  if (probs.size() != count_sequences(num_obs, horizon)) {
    throw std::invalid_argument("TableDist: expected O^T probabilities");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("TableDist: negative or non-finite probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("TableDist: probabilities sum to " + std::to_string(total));
  levels_.resize(horizon + 1);
  levels_[horizon] = std::move(probs);
  const auto o = static_cast<std::size_t>(num_obs);
  for (std::size_t k = horizon; k-- > 0;) {
    const auto& finer = levels_[k + 1];
    std::vector<double> coarse(finer.size() / o, 0.0);
    for (std::size_t i = 0; i < finer.size(); ++i) coarse[i / o] += finer[i];
    levels_[k] = std::move(coarse);
  }
}

TableDist TableDist::from_map(int num_obs, std::size_t horizon, const std::map<ObsSeq, double>& probs) {
  std::vector<double> table(count_sequences(num_obs, horizon), 0.0);
  for (const auto& [seq, p] : probs) {
    if (seq.size() != horizon) throw std::invalid_argument("TableDist: sequence length differs from horizon");
    seq.validate(num_obs);
    table[lex_index(seq, num_obs)] = p;
  }
  return TableDist(num_obs, horizon, std::move(table));
}

TableDist TableDist::from_distribution(const SequenceDistribution& dist, const EnumerationCap& cap) {
  cap.check(dist.num_obs(), dist.horizon());
  const auto seqs = enumerate_sequences(dist.num_obs(), dist.horizon());
  std::vector<double> table;
  table.reserve(seqs.size());
  for (const auto& s : seqs) table.push_back(dist.joint_prob(s));
  return TableDist(dist.num_obs(), dist.horizon(), std::move(table), cap);
}

double TableDist::marginal(const ObsSeq& prefix) const {
  if (prefix.size() > horizon_) throw std::invalid_argument("TableDist::marginal: prefix longer than horizon");
  check_symbols(prefix);
  return levels_[prefix.size()][lex_index(prefix, num_obs_)];
}

double TableDist::conditional_prob(const ObsSeq& history, const ObsSeq& future) const {
  check_lengths(history, future);
  const double ph = marginal(history);
  if (ph <= 0.0) throw ZeroProbabilityHistory("TableDist: history " + history.to_string() + " has probability 0");
  if (future.empty()) return 1.0;
  return marginal(history + future) / ph;
}

double TableDist::joint_prob(const ObsSeq& seq) const {
  if (seq.size() != horizon_) throw std::invalid_argument("joint_prob: sequence length must equal the horizon");
  return marginal(seq);
}

}  // namespace oomlearn
