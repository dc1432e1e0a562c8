#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/oom.hpp"
#include "oomlearn/oracle.hpp"
#include "oomlearn/precond.hpp"

namespace oomlearn {

/// n joint prefixes of length t (duplicates kept); t = 0 gives n copies of φ
/// without querying.
[[nodiscard]] Basis draw_basis(OracleHandle& oracle, std::size_t t, std::size_t n, Rng& stream);

/// Each member repeated `copies` times in place.
[[nodiscard]] Basis repeat_members(const Basis& basis, std::size_t copies);

struct Eigenspace {
  Eigen::MatrixXd projector;  ///< V V^T
  Eigen::MatrixXd vectors;    ///< orthonormal columns of V
  Eigen::VectorXd spectrum;   ///< all eigenvalues, descending
};

/// Span of eigenvectors of the symmetric matrix with eigenvalue > threshold/2.
[[nodiscard]] Eigenspace top_eigenspace(const Eigen::MatrixXd& sigma, double threshold);

/// argmin_z ‖Σ z − q‖² + λ‖z‖² for every column of q.
[[nodiscard]] Eigen::MatrixXd ridge_coefficients(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& q, double ridge);

/// P_next · coefficients · diag(one_step) · P_prev.
[[nodiscard]] Eigen::MatrixXd assemble_operator(const Eigen::MatrixXd& next_projector,
                                                const Eigen::MatrixXd& prev_projector,
                                                const Eigen::MatrixXd& coefficients,
                                                const Eigen::VectorXd& one_step);

/// 4√2·c·α₁ + √2·c·α₃ + α₂: operator error allowed by projection error α₁,
/// coefficient error α₂ and one-step error α₃.
[[nodiscard]] double operator_error_bound(double coef_bound, double proj_err, double coef_err, double step_err);

/// One structured progress record per (t, phase).
struct PhaseRecord {
  std::size_t t = 0;
  std::string phase;
  std::uint64_t queries = 0;  ///< oracle total after the phase
  double seconds = 0.0;
  std::vector<double> spectrum;
  std::size_t kept = 0;
};

struct SamplingLearnResult {
  OomModel model;
  std::vector<PhaseRecord> log;
  std::vector<Eigen::MatrixXd> projectors;
  std::uint64_t queries = 0;
};

using PhaseLogger = std::function<void(const PhaseRecord&)>;

/// Basis draws, preconditioned estimates, eigenspace truncation, ridge coefficients
/// and operator assembly for every t. B_0 = {φ} and B_T is the terminal singleton.
[[nodiscard]] SamplingLearnResult learn_sampling(OracleHandle& oracle, const AlgoParams& params,
                                                 const PhaseLogger& logger = {});

}  // namespace oomlearn
