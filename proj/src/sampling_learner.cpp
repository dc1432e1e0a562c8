#include "oomlearn/sampling_learner.hpp"

#include <chrono>
#include <cmath>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

Basis draw_basis(OracleHandle& oracle, std::size_t t, std::size_t n, Rng& stream) {
  Basis b{t, {}};
  b.members.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.members.push_back(t == 0 ? ObsSeq{} : oracle.sample_joint(t, stream));
  return b;
}

Basis repeat_members(const Basis& basis, std::size_t copies) {
  Basis out{basis.t, {}};
  for (const auto& m : basis.members) {
    for (std::size_t k = 0; k < copies; ++k) out.members.push_back(m);
  }
  return out;
}

Eigenspace top_eigenspace(const Eigen::MatrixXd& sigma, double threshold) {
  const auto spec = symmetric_spectrum(symmetrized(sigma));
  Eigen::Index kept = 0;
  while (kept < spec.values.size() && spec.values(kept) > threshold / 2.0) ++kept;
  Eigenspace out;
  out.vectors = spec.vectors.leftCols(kept);
  out.projector = out.vectors * out.vectors.transpose();
  out.spectrum = spec.values;
  return out;
}

Eigen::MatrixXd ridge_coefficients(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& q, double ridge) {
  if (!(ridge > 0.0)) throw std::invalid_argument("ridge_coefficients: λ must be positive");
  const Eigen::MatrixXd gram =
      sigma.transpose() * sigma + ridge * Eigen::MatrixXd::Identity(sigma.cols(), sigma.cols());
  return gram.ldlt().solve(sigma.transpose() * q);
}

Eigen::MatrixXd assemble_operator(const Eigen::MatrixXd& next_projector, const Eigen::MatrixXd& prev_projector,
                                  const Eigen::MatrixXd& coefficients, const Eigen::VectorXd& one_step) {
  if (next_projector.cols() != coefficients.rows() || coefficients.cols() != one_step.size() ||
      prev_projector.rows() != one_step.size()) {
    throw std::invalid_argument("assemble_operator: shape mismatch");
  }
  return next_projector * coefficients * one_step.asDiagonal() * prev_projector;
}

double operator_error_bound(double coef_bound, double proj_err, double coef_err, double step_err) {
  const double r2 = std::sqrt(2.0);
  return 4.0 * r2 * coef_bound * proj_err + r2 * coef_bound * step_err + coef_err;
}

SamplingLearnResult learn_sampling(OracleHandle& oracle, const AlgoParams& params, const PhaseLogger& logger) {
  if (oracle.mode() != OracleMode::ConditionalSampling) throw WrongOracleMode("learn_sampling needs the sampling oracle");
  params.validate();
  using clock = std::chrono::steady_clock;
  const std::uint64_t start_queries = oracle.query_count();
  const std::size_t horizon = oracle.horizon();
  const Rng root(params.seed);

  SamplingLearnResult out{OomModel(1, 0, {initial_basis()}, {}), {}, {}, 0};
  auto record = [&](std::size_t t, const char* phase, clock::time_point since, const Eigen::VectorXd* spectrum,
                    std::size_t kept) {
    PhaseRecord r;
    r.t = t;
    r.phase = phase;
    r.queries = oracle.query_count();
    r.seconds = std::chrono::duration<double>(clock::now() - since).count();
    if (spectrum) r.spectrum.assign(spectrum->data(), spectrum->data() + spectrum->size());
    r.kept = kept;
    if (logger) logger(r);
    out.log.push_back(std::move(r));
  };

  std::vector<Basis> bases;
  bases.push_back(initial_basis());
  for (std::size_t t = 1; t < horizon; ++t) {
    const auto since = clock::now();
    Rng stream = root.fork(1000 + t);
    bases.push_back(repeat_members(draw_basis(oracle, t, params.n, stream), params.repeat));
    record(t, "draw_basis", since, nullptr, bases.back().size());
  }
  if (horizon > 0) bases.push_back(terminal_basis(horizon));

  std::vector<Eigen::MatrixXd> projectors{Eigen::MatrixXd::Ones(1, 1)};
  std::vector<std::vector<Eigen::MatrixXd>> ops(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    auto since = clock::now();
    const auto est = estimate_sigma_and_q(oracle, bases[t], bases[t - 1], params, root.fork(2000 + t));
    record(t, "estimate", since, nullptr, 0);

    since = clock::now();
    const auto space = top_eigenspace(est.sigma, params.eigen_threshold);
    projectors.push_back(space.projector);
    record(t, "eigenspace", since, &space.spectrum, static_cast<std::size_t>(space.vectors.cols()));

    since = clock::now();
    for (Symbol o = 1; o <= oracle.num_obs(); ++o) {
      const Eigen::MatrixXd beta = ridge_coefficients(est.sigma, est.q[static_cast<std::size_t>(o - 1)], params.ridge);
      ops[t - 1].push_back(assemble_operator(projectors[t], projectors[t - 1], beta, est.one_step.col(o - 1)));
    }
    record(t, "assemble", since, nullptr, 0);
  }
  out.model = OomModel(oracle.num_obs(), horizon, std::move(bases), std::move(ops));
  out.projectors = std::move(projectors);
  out.queries = oracle.query_count() - start_queries;
  return out;
}

}  // namespace oomlearn
