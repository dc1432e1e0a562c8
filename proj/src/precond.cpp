#include "oomlearn/precond.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

namespace {

std::uint64_t stream_id(std::uint64_t tag, const ObsSeq& a, const ObsSeq& b = ObsSeq{}) {
  const ObsSeqHash h;
  std::uint64_t v = tag * 0x9e3779b97f4a7c15ULL;
  v ^= h(a) + 0x632be59bd9b4e019ULL + (v << 6) + (v >> 2);
  v ^= h(b) + 0x85ebca6b27d4eb4fULL + (v << 6) + (v >> 2);
  return v;
}

double first_symbol_frequency(OracleHandle& oracle, const ObsSeq& history, Symbol o, std::size_t samples,
                              Rng& stream) {
  const auto draws = oracle.sample_queries(history, samples, stream);
  std::size_t hits = 0;
  for (const auto& f : draws) hits += (!f.empty() && f[0] == o) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace

void AlgoParams::validate() const {
  if (n == 0 || m == 0) throw std::invalid_argument("AlgoParams: n and m must be positive");
  if (!(eigen_threshold > 0.0) || eigen_threshold > 1.0) throw std::invalid_argument("AlgoParams: Δ must lie in (0, 1]");
  if (!(ridge > 0.0)) throw std::invalid_argument("AlgoParams: λ must be positive");
  if (!(regularity > 0.0)) throw std::invalid_argument("AlgoParams: α must be positive");
  if (!(rel_accuracy > 0.0) || rel_accuracy >= 0.5) throw std::invalid_argument("AlgoParams: γ must lie in (0, 1/2)");
  if (!(epsilon > 0.0) || !(delta > 0.0) || delta >= 1.0) throw std::invalid_argument("AlgoParams: bad ε or δ");
  if (!(coef_bound > 0.0) || !(speed_factor > 0.0)) throw std::invalid_argument("AlgoParams: c and speed must be positive");
  if (repeat == 0) throw std::invalid_argument("AlgoParams: repeat must be positive");
}

std::size_t AlgoParams::relative_schedule(std::size_t future_length) const {
  if (relative_samples) return relative_samples;
  const double len = static_cast<double>(std::max<std::size_t>(future_length, 1));
  const double ga = rel_accuracy * regularity;
  const double raw = 16.0 * len * len * std::log(std::max(len, 2.0) / delta) / (ga * ga);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw / speed_factor)));
}

std::size_t AlgoParams::test_schedule(std::size_t horizon) const {
  if (test_samples) return test_samples;
  const double raw = static_cast<double>(n * std::max<std::size_t>(horizon, 1)) * std::log(1.0 / delta) /
                     (regularity * regularity);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw / speed_factor)));
}

RegularityResult regularity_test(OracleHandle& oracle, const ObsSeq& future, const ObsSeq& history, double alpha,
                                 std::size_t samples_per_step, Rng& stream) {
  RegularityResult out;
  for (std::size_t tau = 0; tau < future.size(); ++tau) {
    const double est = first_symbol_frequency(oracle, history + future.prefix(tau), future[tau], samples_per_step, stream);
    out.step_estimates.push_back(est);
    if (est <= 2.0 * alpha) {
      out.pass = false;
      break;
    }
  }
  return out;
}

double estimate_relative_cond_prob(OracleHandle& oracle, const ObsSeq& history, const ObsSeq& future,
                                   std::size_t samples_per_step, Rng& stream) {
  double prod = 1.0;
  for (std::size_t tau = 0; tau < future.size() && prod > 0.0; ++tau) {
    prod *= first_symbol_frequency(oracle, history + future.prefix(tau), future[tau], samples_per_step, stream);
  }
  return prod;
}

Eigen::MatrixXd estimate_one_step(OracleHandle& oracle, const Basis& basis, std::size_t samples, Rng& stream) {
  const int num_obs = oracle.num_obs();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(basis.size()), num_obs);
  std::map<ObsSeq, Eigen::RowVectorXd> seen;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const ObsSeq& b = basis.members[i];
    auto it = seen.find(b);
    if (it == seen.end()) {
      Rng local = stream.fork(stream_id(4, b));
      const auto draws = oracle.sample_queries(b, samples, local);
      Eigen::RowVectorXd freq = Eigen::RowVectorXd::Zero(num_obs);
      for (const auto& f : draws) freq(f[0] - 1) += 1.0;
      freq /= static_cast<double>(samples);
      it = seen.emplace(b, freq).first;
    }
    out.row(static_cast<Eigen::Index>(i)) = it->second;
  }
  return out;
}

PrecondEstimator::PrecondEstimator(OracleHandle& oracle, Basis basis, const AlgoParams& params, Rng stream)
    : oracle_(oracle), basis_(std::move(basis)), params_(params), stream_(stream), horizon_(oracle.horizon()) {
  if (basis_.size() == 0) throw std::invalid_argument("PrecondEstimator: empty basis");
  basis_.validate();
}

double PrecondEstimator::screened_estimate(const ObsSeq& b, const ObsSeq& f) {
  if (f.empty()) return 1.0;
  auto key = std::make_pair(b, f);
  if (auto it = estimates_.find(key); it != estimates_.end()) return it->second;
  Rng test_stream = stream_.fork(stream_id(1, b, f));
  double value = 0.0;
  if (regularity_test(oracle_, f, b, params_.regularity, params_.test_schedule(horizon_), test_stream).pass) {
    Rng rel_stream = stream_.fork(stream_id(2, b, f));
    value = estimate_relative_cond_prob(oracle_, b, f, params_.relative_schedule(f.size()), rel_stream);
  }
  estimates_.emplace(std::move(key), value);
  return value;
}

Eigen::VectorXd PrecondEstimator::column(const ObsSeq& x) {
  if (auto it = columns_.find(x); it != columns_.end()) return it->second;
  if (x.size() != basis_.t) throw std::invalid_argument("PrecondEstimator: x has the wrong length");
  const auto n = static_cast<Eigen::Index>(basis_.size());
  Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
  if (x.size() == horizon_) {
    // Only the empty future remains: every ratio is exactly 1.
    col.setOnes();
  } else {
    Rng draw_stream = stream_.fork(stream_id(3, x));
    const auto draws = oracle_.sample_queries(x, params_.m, draw_stream);
    std::map<ObsSeq, std::size_t> tally;
    for (const auto& f : draws) ++tally[f];
    Eigen::VectorXd est(n);
    for (const auto& [f, count] : tally) {
      for (Eigen::Index i = 0; i < n; ++i) est(i) = screened_estimate(basis_.members[static_cast<std::size_t>(i)], f);
      const double d = est.mean();
      if (!(d > 0.0)) continue;
      col += static_cast<double>(count) * est / d;
    }
    col /= static_cast<double>(params_.m);
  }
  columns_.emplace(x, col);
  return col;
}

double PrecondEstimator::entry(const ObsSeq& b_star, const ObsSeq& x) {
  const auto it = std::find(basis_.members.begin(), basis_.members.end(), b_star);
  if (it == basis_.members.end()) throw std::invalid_argument("PrecondEstimator::entry: b* is not a basis member");
  return column(x)(it - basis_.members.begin());
}

double estimate_precond_sum(OracleHandle& oracle, const ObsSeq& b_star, const ObsSeq& x, const Basis& basis,
                            const AlgoParams& params, Rng stream) {
  PrecondEstimator est(oracle, basis, params, stream);
  return est.entry(b_star, x);
}

PrecondEstimates estimate_sigma_and_q(OracleHandle& oracle, const Basis& basis, const Basis& previous,
                                      const AlgoParams& params, Rng stream) {
  if (previous.t + 1 != basis.t) throw std::invalid_argument("estimate_sigma_and_q: bases are not adjacent");
  PrecondEstimator est(oracle, basis, params, stream.fork(1));
  const auto n = static_cast<Eigen::Index>(basis.size());
  PrecondEstimates out;
  out.sigma.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) out.sigma.col(j) = est.column(basis.members[static_cast<std::size_t>(j)]);
  out.sigma = symmetrized(out.sigma);
  Rng one_step_stream = stream.fork(2);
  out.one_step = estimate_one_step(oracle, previous, params.one_step_count(), one_step_stream);
  const auto prev_n = static_cast<Eigen::Index>(previous.size());
  for (Symbol o = 1; o <= oracle.num_obs(); ++o) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, prev_n);
    for (Eigen::Index i = 0; i < prev_n; ++i) {
      // Columns multiplied by a zero one-step estimate never reach the operator.
      if (out.one_step(i, o - 1) <= 0.0) continue;
      q.col(i) = est.column(previous.members[static_cast<std::size_t>(i)].appended(o));
    }
    out.q.push_back(std::move(q));
  }
  return out;
}

namespace {

struct Weighted {
  Eigen::MatrixXd p;       ///< Pr[F_t | B] restricted to d(f) > 0
  Eigen::VectorXd inv_d;
  std::vector<ObsSeq> futures;
};

Weighted weighted_table(const SequenceDistribution& dist, const Basis& basis) {
  const auto all = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd p = cond_block(dist, basis.members, all);
  const Eigen::VectorXd d = p.rowwise().mean();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > 0.0) keep.push_back(i);
  }
  Weighted w{Eigen::MatrixXd(static_cast<Eigen::Index>(keep.size()), p.cols()),
             Eigen::VectorXd(static_cast<Eigen::Index>(keep.size())), {}};
  for (std::size_t k = 0; k < keep.size(); ++k) {
    w.p.row(static_cast<Eigen::Index>(k)) = p.row(keep[k]);
    w.inv_d(static_cast<Eigen::Index>(k)) = 1.0 / d(keep[k]);
    w.futures.push_back(all[static_cast<std::size_t>(keep[k])]);
  }
  return w;
}

}  // namespace

Eigen::MatrixXd exact_sigma(const SequenceDistribution& dist, const Basis& basis) {
  const auto w = weighted_table(dist, basis);
  return w.p.transpose() * w.inv_d.asDiagonal() * w.p;
}

Eigen::VectorXd exact_q(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& x) {
  const auto w = weighted_table(dist, basis);
  const auto col = dist.conditional_probs(x, w.futures);
  const Eigen::Map<const Eigen::VectorXd> px(col.data(), static_cast<Eigen::Index>(col.size()));
  return w.p.transpose() * w.inv_d.asDiagonal() * px;
}

}  // namespace oomlearn
