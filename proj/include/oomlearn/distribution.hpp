#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/obs_seq.hpp"
#include "oomlearn/rng.hpp"

namespace oomlearn {

/// Which futures index the rows of a conditional-probability matrix at split t.
enum class FutureScheme {
  ExactLength,  ///< all futures of length exactly T − t
  UpToLength,   ///< all futures of length 0..T − t, shortest first
};

/// Thrown when an exhaustive enumeration would exceed the configured size.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when conditioning on a history that has no canonical conditional.
class ZeroProbabilityHistory : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Upper bound on the number of sequences any enumeration may visit.
struct EnumerationCap {
  std::uint64_t max_sequences = std::uint64_t{1} << 22;

  /// Throws EnumerationCapExceeded if O^length is larger than the cap.
  void check(int num_obs, std::size_t length) const;
};

/// A distribution over length-T sequences on the alphabet 1..O, accessed through
/// conditionals. Implementations are immutable and safe for concurrent reads.
class SequenceDistribution {
 public:
  virtual ~SequenceDistribution() = default;

  [[nodiscard]] virtual int num_obs() const = 0;
  [[nodiscard]] virtual std::size_t horizon() const = 0;

  /// Pr[future | history]; requires |history| + |future| ≤ T.
  [[nodiscard]] virtual double conditional_prob(const ObsSeq& history, const ObsSeq& future) const = 0;

  /// Pr[x_1..x_T]; requires |seq| = T.
  [[nodiscard]] virtual double joint_prob(const ObsSeq& seq) const;

  /// Pr[o | history] for o = 1..O; requires |history| < T.
  [[nodiscard]] virtual std::vector<double> next_symbol_probs(const ObsSeq& history) const;

  /// Pr[f | history] for each future.
  [[nodiscard]] virtual std::vector<double> conditional_probs(const ObsSeq& history,
                                                              std::span<const ObsSeq> futures) const;

  /// One draw of the remaining T − |history| symbols.
  [[nodiscard]] virtual ObsSeq sample_conditional(const ObsSeq& history, Rng& rng) const;

  /// `count` independent draws; equivalent to repeated sample_conditional.
  [[nodiscard]] virtual std::vector<ObsSeq> sample_conditional_batch(const ObsSeq& history, std::size_t count,
                                                                     Rng& rng) const;

 protected:
  void check_symbols(const ObsSeq& seq) const;
  void check_lengths(const ObsSeq& history, const ObsSeq& future) const;
};

/// Futures indexing the rows at split t under `scheme`.
[[nodiscard]] std::vector<ObsSeq> futures_at(int num_obs, std::size_t horizon, std::size_t t, FutureScheme scheme);

/// Pr[F_t | H_t] with histories H_t = all length-t sequences (lexicographic).
struct CondMatrix {
  Eigen::MatrixXd values;  ///< (i, j) = Pr[futures[i] | histories[j]]
  std::vector<ObsSeq> histories;
  std::vector<ObsSeq> futures;
};

[[nodiscard]] CondMatrix cond_matrix(const SequenceDistribution& dist, std::size_t t, FutureScheme scheme,
                                     const EnumerationCap& cap = {});

/// Pr[F | B] for explicit histories and futures.
[[nodiscard]] Eigen::MatrixXd cond_block(const SequenceDistribution& dist, std::span<const ObsSeq> histories,
                                         std::span<const ObsSeq> futures);

/// Max over t ∈ 1..T of the numerical rank of cond_matrix(t, UpToLength).
[[nodiscard]] int rank_of(const SequenceDistribution& dist, double rel_tol = 1e-8, const EnumerationCap& cap = {});

/// Pr[x] for every length-t prefix x, in lexicographic order.
[[nodiscard]] Eigen::VectorXd prefix_probs(const SequenceDistribution& dist, std::size_t t,
                                           const EnumerationCap& cap = {});

}  // namespace oomlearn
