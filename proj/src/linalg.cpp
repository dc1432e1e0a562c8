#include "oomlearn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oomlearn {

namespace {

Eigen::JacobiSVD<Eigen::MatrixXd> full_svd(const Eigen::MatrixXd& a) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

int count_above(const Eigen::VectorXd& sv, double rel) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = rel * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > cut ? 1 : 0;
  return r;
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_cutoff) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int r = count_above(sv, rel_cutoff);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.cols(), a.rows());
  for (int i = 0; i < r; ++i) {
    out.noalias() += svd.matrixV().col(i) * (svd.matrixU().col(i).transpose() / sv(i));
  }
  return out;
}

Eigen::MatrixXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_cutoff) {
  return pseudo_inverse(a, rel_cutoff) * b;
}

int numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return count_above(svd.singularValues(), rel_tol);
}

SymmetricSpectrum symmetric_spectrum(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::Index n = a.rows();
  SymmetricSpectrum out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double smallest_nonzero(const Eigen::VectorXd& descending, double rel_cutoff) {
  if (descending.size() == 0) return 0.0;
  const double scale = descending.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return 0.0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < descending.size(); ++i) {
    if (descending(i) > rel_cutoff * scale) best = descending(i);
  }
  return best;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd projector(const Eigen::MatrixXd& columns) { return columns * columns.transpose(); }

Eigen::MatrixXd column_space(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return Eigen::MatrixXd(a.rows(), 0);
  auto svd = full_svd(a);
  const int r = count_above(svd.singularValues(), rel_tol);
  return svd.matrixU().leftCols(r);
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return Eigen::MatrixXd::Identity(a.cols(), a.cols());
  auto svd = full_svd(a);
  const int r = count_above(svd.singularValues(), rel_tol);
  return svd.matrixV().rightCols(a.cols() - r);
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

}  // namespace oomlearn
