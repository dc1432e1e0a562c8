#pragma once

#include <vector>

#include <Eigen/Dense>

#include "oomlearn/distribution.hpp"
#include "oomlearn/oom.hpp"

namespace oomlearn {

/// ½ Σ_x |p(x) − q(x)| over all length-T sequences.
[[nodiscard]] double tv_exact(const SequenceDistribution& p, const SequenceDistribution& q,
                              const EnumerationCap& cap = {});
/// Same against a raw model; signed values allowed, so the result may exceed 1.
[[nodiscard]] double tv_exact(const SequenceDistribution& p, const OomModel& q, const EnumerationCap& cap = {});

/// max over t < T and o of E_{x∼p}|q(o|x) − p(o|x)|, x of length t, by enumeration.
[[nodiscard]] double conditional_gap_exact(const SequenceDistribution& p, const SequenceDistribution& q,
                                           const EnumerationCap& cap = {});
/// Same expectation estimated from `samples_per_length` joint draws of p per t.
[[nodiscard]] double conditional_gap_sampled(const SequenceDistribution& p, const SequenceDistribution& q,
                                             std::size_t samples_per_length, Rng& rng);

/// (T+1)·O·gap/2, an upper bound on TV(p, q).
[[nodiscard]] double tv_bound_from_gap(std::size_t horizon, int num_obs, double gap);
[[nodiscard]] double tv_conditional_bound(const SequenceDistribution& p, const SequenceDistribution& q,
                                          std::size_t samples_per_length, Rng& rng);

struct FidelityLevel {
  std::size_t t = 0;
  std::size_t basis_size = 0;
  double sigma_plus = 0.0;
  std::vector<double> spectrum;  ///< descending
};

struct FidelityReport {
  std::vector<FidelityLevel> levels;  ///< t = 1..T
  double min_sigma_plus = 0.0;        ///< spectral candidate for the fidelity
  std::size_t max_basis_size = 0;     ///< the size constraint asks for ≤ 1/fidelity
};

/// Smallest nonzero eigenvalue of S^{1/2} Pᵀ D⁻¹ P S^{1/2} per t, where P = Pr[F_t|H_t]
/// over all length-t histories, S = diag Pr[h], D = diag of the basis-average of
/// Pr[f|b]. Futures with zero average are dropped. `bases` is indexed by t.
[[nodiscard]] FidelityReport fidelity_for_bases(const SequenceDistribution& dist, const std::vector<Basis>& bases,
                                                double rel_cutoff = 1e-10, const EnumerationCap& cap = {});

/// Smallest nonzero eigenvalue of Σ_B = Pᵀ D⁻¹ P for one basis.
[[nodiscard]] double robust_sigma_at(const SequenceDistribution& dist, const Basis& basis, double rel_cutoff = 1e-10);
/// Minimum of robust_sigma_at over t = 1..T.
[[nodiscard]] double robust_sigma(const SequenceDistribution& dist, const std::vector<Basis>& bases,
                                  double rel_cutoff = 1e-10);

/// D^{-1/2} P Pᵀ D^{-1/2}, which shares its nonzero spectrum with Σ_B.
[[nodiscard]] Eigen::MatrixXd inner_covariance(const SequenceDistribution& dist, const Basis& basis);

struct BasisSearchLevel {
  std::size_t t = 0;
  Basis best;
  double sigma_plus = 0.0;
};
struct BasisSearchResult {
  std::vector<BasisSearchLevel> levels;
  double min_sigma_plus = 0.0;
  std::size_t max_basis_size = 0;
};

/// Per t, the spanning multiset of at most `max_size` histories maximizing the
/// fidelity eigenvalue. Requires T ≤ 4.
[[nodiscard]] BasisSearchResult best_fidelity_search(const SequenceDistribution& dist, std::size_t max_size = 3);

/// Pr[x_2 = i, x_1 = j] as an O×O matrix.
[[nodiscard]] Eigen::MatrixXd pair_marginal(const SequenceDistribution& dist);

/// Fidelity eigenvalue at t = 1 with futures replaced by the next symbol and the
/// basis formed by all one-symbol histories.
[[nodiscard]] double one_step_fidelity(const SequenceDistribution& dist, double rel_cutoff = 1e-10);

/// Pr[F_b | b]: mass of futures with some one-step conditional ≤ α.
[[nodiscard]] double irregular_mass(const SequenceDistribution& dist, const ObsSeq& history, double alpha);

}  // namespace oomlearn
