#include "oomlearn/approx_basis.hpp"

#include <cmath>
#include <map>
#include <set>

#include "oomlearn/linalg.hpp"
#include "oomlearn/precond.hpp"

namespace oomlearn {

namespace {

std::uint64_t stream_id(std::uint64_t tag, const ObsSeq& a, const ObsSeq& b = ObsSeq{}) {
  const ObsSeqHash h;
  std::uint64_t v = tag * 0xd6e8feb86659fd93ULL;
  v ^= h(a) + 0x9e3779b97f4a7c15ULL + (v << 6) + (v >> 2);
  v ^= h(b) + 0xc2b2ae3d27d4eb4fULL + (v << 6) + (v >> 2);
  return v;
}

}  // namespace

double mixture_density(double p_x, std::span<const double> p_basis) {
  if (p_basis.empty()) throw std::invalid_argument("mixture_density: empty basis");
  double sum = 0.0;
  for (double p : p_basis) sum += p;
  return 0.5 * p_x + 0.5 * sum / static_cast<double>(p_basis.size());
}

double empirical_l2_loss(const LossInputs& in, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = in.target - in.features * beta;
  return in.weights.dot(r.cwiseAbs2());
}

Eigen::VectorXd min_capped_ridge(const LossInputs& in, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("min_capped_ridge: cap must be positive");
  const Eigen::MatrixXd weighted = in.weights.asDiagonal() * in.features;
  const Eigen::MatrixXd gram = in.features.transpose() * weighted;
  const Eigen::VectorXd g = weighted.transpose() * in.target;
  Eigen::VectorXd beta = pseudo_inverse(gram) * g;
  if (beta.norm() <= cap) return beta;
  // ‖(G + μI)⁻¹g‖ decreases in μ and is at most ‖g‖/μ, so [0, ‖g‖/cap] brackets the cap.
  const auto n = gram.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  double lo = 0.0;
  double hi = g.norm() / cap;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    beta = (gram + mid * eye).ldlt().solve(g);
    const double norm = beta.norm();
    if (norm > cap) {
      lo = mid;
    } else if (norm < 0.999 * cap) {
      hi = mid;
    } else {
      return beta;
    }
  }
  return (gram + hi * eye).ldlt().solve(g);
}

void ApproxBasisParams::validate() const {
  if (!(epsilon > 0.0) || epsilon >= 1.0) throw std::invalid_argument("ApproxBasisParams: ε must lie in (0, 1)");
  if (!(delta > 0.0) || delta >= 1.0) throw std::invalid_argument("ApproxBasisParams: δ must lie in (0, 1)");
  if (!(alpha > 0.0) || alpha > 0.5) throw std::invalid_argument("ApproxBasisParams: α must lie in (0, 1/2]");
  if (rank_bound == 0 || futures_per_loss == 0) throw std::invalid_argument("ApproxBasisParams: r and m must be positive");
  if (!(rel_accuracy > 0.0) || rel_accuracy >= 0.5) throw std::invalid_argument("ApproxBasisParams: γ must lie in (0, 1/2)");
}

std::size_t ApproxBasisParams::relative_schedule(std::size_t future_length) const {
  if (relative_samples) return relative_samples;
  const double len = static_cast<double>(std::max<std::size_t>(future_length, 1));
  const double ga = rel_accuracy * alpha;
  return static_cast<std::size_t>(std::ceil(16.0 * len * len * std::log(std::max(len, 2.0) / delta) / (ga * ga)));
}

double norm_cap(std::size_t horizon, std::size_t rank_bound, double alpha, double epsilon) {
  return std::sqrt(2.0 * static_cast<double>(horizon * rank_bound) * std::log(16.0 / (alpha * epsilon * epsilon)));
}

std::size_t round_cap(std::size_t horizon, std::size_t rank_bound, double alpha, double epsilon) {
  const double t = static_cast<double>(horizon);
  return static_cast<std::size_t>(
      std::ceil(8.0 * static_cast<double>(rank_bound) * t * t * std::log(16.0 / (epsilon * epsilon * alpha))));
}

ApproxBasisResult find_approx_basis(OracleHandle& oracle, std::size_t t, const ApproxBasisParams& params) {
  params.validate();
  const std::size_t horizon = oracle.horizon();
  if (t > horizon) throw std::invalid_argument("find_approx_basis: t exceeds the horizon");
  const std::uint64_t start = oracle.query_count();

  ApproxBasisResult out;
  out.cap = norm_cap(horizon, params.rank_bound, params.alpha, params.epsilon);
  out.round_limit = params.max_rounds ? params.max_rounds
                                      : round_cap(horizon, params.rank_bound, params.alpha, params.epsilon);
  const std::size_t per_round =
      params.histories_per_round
          ? params.histories_per_round
          : static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(out.round_limit) / params.delta) /
                                               (params.epsilon * params.epsilon)));
  const double threshold = params.epsilon * params.epsilon / 8.0;

  const Rng root(params.seed);
  Rng history_stream = root.fork(1);
  out.core = Basis{t, {oracle.sample_joint(t, history_stream)}};

  std::map<std::pair<ObsSeq, ObsSeq>, double> estimates;
  auto relative = [&](const ObsSeq& b, const ObsSeq& f) {
    if (f.empty()) return 1.0;
    auto key = std::make_pair(b, f);
    if (auto it = estimates.find(key); it != estimates.end()) return it->second;
    Rng stream = root.fork(stream_id(2, b, f));
    const double v = estimate_relative_cond_prob(oracle, b, f, params.relative_schedule(f.size()), stream);
    estimates.emplace(std::move(key), v);
    return v;
  };

  auto candidate_loss = [&](const ObsSeq& x, std::size_t round) {
    if (t == horizon) return 0.0;
    const std::size_t h = out.core.size();
    const std::size_t m = params.futures_per_loss;
    Rng stream = root.fork(stream_id(3 + 16 * round, x));
    std::size_t from_x = 0;
    std::vector<std::size_t> from_member(h, 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (stream.uniform() < 0.5) {
        ++from_x;
      } else {
        ++from_member[stream.uniform_index(h)];
      }
    }
    std::vector<ObsSeq> futures = oracle.sample_queries(x, from_x, stream);
    for (std::size_t j = 0; j < h; ++j) {
      auto more = oracle.sample_queries(out.core.members[j], from_member[j], stream);
      futures.insert(futures.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    LossInputs in{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(h)),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m)),
                  Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m))};
    std::vector<double> pb(h);
    for (std::size_t i = 0; i < futures.size(); ++i) {
      const ObsSeq& f = futures[i];
      const double px = relative(x, f);
      for (std::size_t j = 0; j < h; ++j) pb[j] = relative(out.core.members[j], f);
      const double d = mixture_density(px, pb);
      if (d <= 0.0) continue;  // an all-zero row adds nothing to the loss
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < h; ++j) in.features(row, static_cast<Eigen::Index>(j)) = pb[j] / d;
      in.target(row) = px / d;
    }
    return empirical_l2_loss(in, min_capped_ridge(in, out.cap));
  };

  bool converged = false;
  for (std::size_t round = 1; round <= out.round_limit && !converged; ++round) {
    ApproxRound rec;
    rec.round = round;
    std::set<ObsSeq> seen(out.core.members.begin(), out.core.members.end());
    for (std::size_t i = 0; i < per_round && !rec.added; ++i) {
      ObsSeq x = oracle.sample_joint(t, history_stream);
      // Members reach loss 0 through their own indicator vector.
      if (!seen.insert(x).second) continue;
      ++rec.candidates;
      const double loss = candidate_loss(x, round);
      rec.max_loss = std::max(rec.max_loss, loss);
      if (loss > threshold) {
        out.core.members.push_back(x);
        rec.added = std::move(x);
      }
    }
    converged = !rec.added;
    out.rounds = round;
    out.log.push_back(std::move(rec));
  }
  out.queries = oracle.query_count() - start;
  if (!converged) throw RoundCapExceeded("find_approx_basis: counterexample found in the final allowed round");

  out.copies = static_cast<std::size_t>(std::ceil(out.cap * out.cap));
  out.repeated.t = t;
  for (const auto& b : out.core.members) out.repeated.members.insert(out.repeated.members.end(), out.copies, b);
  return out;
}

LossInputs population_loss_inputs(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& x) {
  if (basis.size() == 0) throw std::invalid_argument("population_loss_inputs: empty basis");
  const auto futures = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd pb = cond_block(dist, basis.members, futures);
  const std::vector<ObsSeq> xs{x};
  const Eigen::VectorXd px = cond_block(dist, xs, futures).col(0);
  std::vector<Eigen::Index> keep;
  Eigen::VectorXd d(px.size());
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    d(i) = 0.5 * px(i) + 0.5 * pb.row(i).mean();
    if (d(i) > 0.0) keep.push_back(i);
  }
  const auto rows = static_cast<Eigen::Index>(keep.size());
  LossInputs in{Eigen::MatrixXd(rows, pb.cols()), Eigen::VectorXd(rows), Eigen::VectorXd(rows)};
  for (Eigen::Index k = 0; k < rows; ++k) {
    const Eigen::Index i = keep[static_cast<std::size_t>(k)];
    in.features.row(k) = pb.row(i) / d(i);
    in.target(k) = px(i) / d(i);
    in.weights(k) = d(i);
  }
  return in;
}

double l1_residual(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& x, const Eigen::VectorXd& beta) {
  const auto futures = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd pb = cond_block(dist, basis.members, futures);
  const std::vector<ObsSeq> xs{x};
  return (cond_block(dist, xs, futures).col(0) - pb * beta).lpNorm<1>();
}

double expected_l1_residual(const SequenceDistribution& dist, const Basis& basis, double cap) {
  double total = 0.0;
  for (const auto& x : enumerate_sequences(dist.num_obs(), basis.t)) {
    const double px = dist.conditional_prob(ObsSeq{}, x);
    if (px <= 0.0) continue;
    const Eigen::VectorXd beta = min_capped_ridge(population_loss_inputs(dist, basis, x), cap);
    total += px * l1_residual(dist, basis, x, beta);
  }
  return total;
}

double elliptical_potential_average(const Eigen::MatrixXd& vectors, double lambda, bool include_current) {
  if (!(lambda > 0.0)) throw std::invalid_argument("elliptical_potential_average: λ must be positive");
  const auto dim = vectors.rows();
  const auto count = vectors.cols();
  if (count == 0) return 0.0;
  Eigen::MatrixXd sigma = lambda * Eigen::MatrixXd::Identity(dim, dim);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::VectorXd x = vectors.col(i);
    if (include_current) sigma += x * x.transpose();
    sum += std::log1p(x.dot(sigma.ldlt().solve(x)));
    if (!include_current) sigma += x * x.transpose();
  }
  return sum / static_cast<double>(count);
}

double elliptical_bound(std::size_t dim, std::size_t count, double norm_bound, double lambda) {
  const double d = static_cast<double>(dim);
  const double n = static_cast<double>(count);
  return d / n * std::log1p(n * norm_bound * norm_bound / (d * lambda));
}

}  // namespace oomlearn
