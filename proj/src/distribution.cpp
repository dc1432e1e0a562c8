#include "oomlearn/distribution.hpp"

#include <string>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

void EnumerationCap::check(int num_obs, std::size_t length) const {
  std::uint64_t n = 0;
  try {
    n = count_sequences(num_obs, length);
  } catch (const std::overflow_error&) {
    throw EnumerationCapExceeded("enumeration of length-" + std::to_string(length) + " sequences overflows");
  }
  if (n > max_sequences) {
    throw EnumerationCapExceeded("enumeration of " + std::to_string(n) + " sequences exceeds cap " +
                                 std::to_string(max_sequences));
  }
}

void SequenceDistribution::check_symbols(const ObsSeq& seq) const { seq.validate(num_obs()); }

void SequenceDistribution::check_lengths(const ObsSeq& history, const ObsSeq& future) const {
  if (history.size() + future.size() > horizon()) {
    throw std::invalid_argument("history+future length " + std::to_string(history.size() + future.size()) +
                                " exceeds horizon " + std::to_string(horizon()));
  }
  check_symbols(history);
  check_symbols(future);
}

double SequenceDistribution::joint_prob(const ObsSeq& seq) const {
  if (seq.size() != horizon()) throw std::invalid_argument("joint_prob: sequence length must equal the horizon");
  return conditional_prob(ObsSeq{}, seq);
}

std::vector<double> SequenceDistribution::next_symbol_probs(const ObsSeq& history) const {
  if (history.size() >= horizon()) throw std::invalid_argument("next_symbol_probs: history already at horizon");
  std::vector<double> out(static_cast<std::size_t>(num_obs()));
  for (int o = 1; o <= num_obs(); ++o) out[static_cast<std::size_t>(o - 1)] = conditional_prob(history, ObsSeq{o});
  return out;
}

std::vector<double> SequenceDistribution::conditional_probs(const ObsSeq& history,
                                                            std::span<const ObsSeq> futures) const {
  std::vector<double> out;
  out.reserve(futures.size());
  for (const auto& f : futures) out.push_back(conditional_prob(history, f));
  return out;
}

ObsSeq SequenceDistribution::sample_conditional(const ObsSeq& history, Rng& rng) const {
  check_lengths(history, ObsSeq{});
  ObsSeq prefix = history;
  while (prefix.size() < horizon()) {
    const auto probs = next_symbol_probs(prefix);
    prefix.push_back(static_cast<Symbol>(rng.categorical(probs)) + 1);
  }
  return prefix.suffix_from(history.size());
}

std::vector<ObsSeq> SequenceDistribution::sample_conditional_batch(const ObsSeq& history, std::size_t count,
                                                                   Rng& rng) const {
  std::vector<ObsSeq> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_conditional(history, rng));
  return out;
}

std::vector<ObsSeq> futures_at(int num_obs, std::size_t horizon, std::size_t t, FutureScheme scheme) {
  if (t > horizon) throw std::invalid_argument("futures_at: split beyond horizon");
  return scheme == FutureScheme::ExactLength ? enumerate_sequences(num_obs, horizon - t)
                                             : enumerate_up_to(num_obs, horizon - t);
}

Eigen::MatrixXd cond_block(const SequenceDistribution& dist, std::span<const ObsSeq> histories,
                           std::span<const ObsSeq> futures) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(futures.size()), static_cast<Eigen::Index>(histories.size()));
  for (std::size_t j = 0; j < histories.size(); ++j) {
    const auto col = dist.conditional_probs(histories[j], futures);
    for (std::size_t i = 0; i < futures.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  }
  return out;
}

CondMatrix cond_matrix(const SequenceDistribution& dist, std::size_t t, FutureScheme scheme,
                       const EnumerationCap& cap) {
  cap.check(dist.num_obs(), dist.horizon());
  CondMatrix out;
  out.histories = enumerate_sequences(dist.num_obs(), t);
  out.futures = futures_at(dist.num_obs(), dist.horizon(), t, scheme);
  out.values = cond_block(dist, out.histories, out.futures);
  return out;
}

int rank_of(const SequenceDistribution& dist, double rel_tol, const EnumerationCap& cap) {
  int best = 0;
  for (std::size_t t = 1; t <= dist.horizon(); ++t) {
    const auto m = cond_matrix(dist, t, FutureScheme::UpToLength, cap);
    best = std::max(best, numerical_rank(m.values, rel_tol));
  }
  return best;
}

Eigen::VectorXd prefix_probs(const SequenceDistribution& dist, std::size_t t, const EnumerationCap& cap) {
  cap.check(dist.num_obs(), t);
  const auto prefixes = enumerate_sequences(dist.num_obs(), t);
  Eigen::VectorXd out(static_cast<Eigen::Index>(prefixes.size()));
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = dist.conditional_prob(ObsSeq{}, prefixes[i]);
  }
  return out;
}

}  // namespace oomlearn
