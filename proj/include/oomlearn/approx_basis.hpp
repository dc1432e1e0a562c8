#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/oom.hpp"
#include "oomlearn/oracle.hpp"

namespace oomlearn {

class RoundCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ½ p_x + (1/2h) Σ_i p_b[i]. Throws on an empty basis.
[[nodiscard]] double mixture_density(double p_x, std::span<const double> p_basis);

/// Weighted quadratic Σ_i w_i (y_i − X_i β)². Empirical losses use w_i = 1/m;
/// population losses use w_i = d(f_i) with one row per future.
struct LossInputs {
  Eigen::MatrixXd features;  ///< rows: Pr[f_i | b_j] / d(f_i)
  Eigen::VectorXd target;    ///< Pr[f_i | x] / d(f_i)
  Eigen::VectorXd weights;
};

[[nodiscard]] double empirical_l2_loss(const LossInputs& in, const Eigen::VectorXd& beta);

/// Minimizer of the loss over ‖β‖₂ ≤ cap. The min-norm least-squares solution is
/// returned when feasible; otherwise the ridge parameter μ in (G + μI)β = g is
/// bisected until ‖β‖₂ ∈ [0.999·cap, cap].
[[nodiscard]] Eigen::VectorXd min_capped_ridge(const LossInputs& in, double cap);

struct ApproxBasisParams {
  double epsilon = 0.1;
  double delta = 0.1;
  double alpha = 0.2;                  ///< regularity: every one-step conditional ≥ α
  std::size_t rank_bound = 2;          ///< r
  std::size_t histories_per_round = 0; ///< 0 = ⌈log(H/δ)/ε²⌉
  std::size_t futures_per_loss = 2000; ///< m draws from the mixture per candidate
  std::size_t relative_samples = 0;    ///< per step of a relative estimate; 0 = schedule
  double rel_accuracy = 0.05;          ///< γ in the relative-estimate schedule
  std::size_t max_rounds = 0;          ///< 0 = H
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] std::size_t relative_schedule(std::size_t future_length) const;
};

/// C = √(2Tr log(16/(αε²))).
[[nodiscard]] double norm_cap(std::size_t horizon, std::size_t rank_bound, double alpha, double epsilon);
/// H = ⌈8rT² log(16/(ε²α))⌉.
[[nodiscard]] std::size_t round_cap(std::size_t horizon, std::size_t rank_bound, double alpha, double epsilon);

struct ApproxRound {
  std::size_t round = 0;
  std::size_t candidates = 0;  ///< distinct histories examined
  double max_loss = 0.0;       ///< largest min L̂ seen this round
  std::optional<ObsSeq> added;
};

struct ApproxBasisResult {
  Basis core;               ///< distinct members as found
  Basis repeated;           ///< each core member repeated `copies` times
  std::size_t copies = 1;   ///< ⌈C²⌉, so coefficients of norm ≤ C shrink to norm ≤ 1
  double cap = 0.0;         ///< C
  std::size_t round_limit = 0;
  std::size_t rounds = 0;
  std::vector<ApproxRound> log;
  std::uint64_t queries = 0;
};

/// Counterexample loop over length-t histories drawn from the joint. B starts from
/// one joint draw; each round adds the first history whose capped minimum loss
/// exceeds ε²/8 and stops at the first round without one. Throws RoundCapExceeded
/// when a counterexample is still found in the last allowed round.
[[nodiscard]] ApproxBasisResult find_approx_basis(OracleHandle& oracle, std::size_t t, const ApproxBasisParams& params);

/// Exact L_{B,x} as a weighted quadratic over all futures of length T−t with d(f) > 0.
[[nodiscard]] LossInputs population_loss_inputs(const SequenceDistribution& dist, const Basis& basis,
                                                const ObsSeq& x);
/// ‖Pr[F|x] − Pr[F|B]β‖₁ over all futures of length T−t.
[[nodiscard]] double l1_residual(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& x,
                                 const Eigen::VectorXd& beta);
/// E_x ‖Pr[F|x] − Pr[F|B]β*(x)‖₁ with β*(x) the capped minimizer of the exact loss.
[[nodiscard]] double expected_l1_residual(const SequenceDistribution& dist, const Basis& basis, double cap);

/// (1/T) Σ_i log(1 + x_iᵀ Σ⁻¹ x_i) for the columns x_i of `vectors`, where
/// Σ = λI + Σ_{j<i} x_j x_jᵀ, or j ≤ i when `include_current`.
[[nodiscard]] double elliptical_potential_average(const Eigen::MatrixXd& vectors, double lambda,
                                                  bool include_current = false);
/// (d/T) log(1 + T B²/(dλ)).
[[nodiscard]] double elliptical_bound(std::size_t dim, std::size_t count, double norm_bound, double lambda);

}  // namespace oomlearn
