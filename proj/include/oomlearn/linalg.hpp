#pragma once

#include <Eigen/Dense>

namespace oomlearn {

/// Moore-Penrose pseudo-inverse; singular values below rel_cutoff·σ_max are dropped.
[[nodiscard]] Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_cutoff = 1e-10);

/// Minimum-norm least-squares solution X of A X = B.
[[nodiscard]] Eigen::MatrixXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                             double rel_cutoff = 1e-10);

/// Number of singular values above rel_tol·σ_max (0 for the zero matrix).
[[nodiscard]] int numerical_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-8);

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
struct SymmetricSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  ///< column i pairs with values(i)
};
[[nodiscard]] SymmetricSpectrum symmetric_spectrum(const Eigen::MatrixXd& a);

/// Smallest eigenvalue exceeding rel_cutoff·max|λ|; 0 when all vanish.
/// Expects values sorted descending.
[[nodiscard]] double smallest_nonzero(const Eigen::VectorXd& descending, double rel_cutoff = 1e-10);

[[nodiscard]] Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a);

/// Orthogonal projector onto the column span of `columns` (assumed orthonormal).
[[nodiscard]] Eigen::MatrixXd projector(const Eigen::MatrixXd& columns);

/// Orthonormal basis of the column space (singular vectors above rel_tol).
[[nodiscard]] Eigen::MatrixXd column_space(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Orthonormal basis of the null space.
[[nodiscard]] Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

[[nodiscard]] double spectral_norm(const Eigen::MatrixXd& a);

}  // namespace oomlearn
