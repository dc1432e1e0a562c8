#include "oomlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

double tv_exact(const SequenceDistribution& p, const SequenceDistribution& q, const EnumerationCap& cap) {
  if (p.num_obs() != q.num_obs() || p.horizon() != q.horizon()) throw std::invalid_argument("tv_exact: shape mismatch");
  cap.check(p.num_obs(), p.horizon());
  double sum = 0.0;
  for (const auto& x : enumerate_sequences(p.num_obs(), p.horizon())) sum += std::abs(p.joint_prob(x) - q.joint_prob(x));
  return 0.5 * sum;
}

double tv_exact(const SequenceDistribution& p, const OomModel& q, const EnumerationCap& cap) {
  if (p.num_obs() != q.num_obs() || p.horizon() != q.horizon()) throw std::invalid_argument("tv_exact: shape mismatch");
  cap.check(p.num_obs(), p.horizon());
  double sum = 0.0;
  for (const auto& x : enumerate_sequences(p.num_obs(), p.horizon())) sum += std::abs(p.joint_prob(x) - eval_prob(q, x));
  return 0.5 * sum;
}

double conditional_gap_exact(const SequenceDistribution& p, const SequenceDistribution& q, const EnumerationCap& cap) {
  cap.check(p.num_obs(), p.horizon());
  double worst = 0.0;
  for (std::size_t t = 0; t < p.horizon(); ++t) {
    std::vector<double> gap(static_cast<std::size_t>(p.num_obs()), 0.0);
    for (const auto& x : enumerate_sequences(p.num_obs(), t)) {
      const double px = p.conditional_prob(ObsSeq{}, x);
      if (px <= 0.0) continue;
      const auto a = p.next_symbol_probs(x);
      const auto b = q.next_symbol_probs(x);
      for (std::size_t o = 0; o < gap.size(); ++o) gap[o] += px * std::abs(a[o] - b[o]);
    }
    worst = std::max(worst, *std::max_element(gap.begin(), gap.end()));
  }
  return worst;
}

double conditional_gap_sampled(const SequenceDistribution& p, const SequenceDistribution& q,
                               std::size_t samples_per_length, Rng& rng) {
  if (samples_per_length == 0) throw std::invalid_argument("conditional_gap_sampled: need samples");
  double worst = 0.0;
  for (std::size_t t = 0; t < p.horizon(); ++t) {
    std::vector<double> gap(static_cast<std::size_t>(p.num_obs()), 0.0);
    for (std::size_t i = 0; i < samples_per_length; ++i) {
      const ObsSeq x = p.sample_conditional(ObsSeq{}, rng).prefix(t);
      const auto a = p.next_symbol_probs(x);
      const auto b = q.next_symbol_probs(x);
      for (std::size_t o = 0; o < gap.size(); ++o) gap[o] += std::abs(a[o] - b[o]);
    }
    for (double g : gap) worst = std::max(worst, g / static_cast<double>(samples_per_length));
  }
  return worst;
}

double tv_bound_from_gap(std::size_t horizon, int num_obs, double gap) {
  return static_cast<double>(horizon + 1) * num_obs * gap / 2.0;
}

double tv_conditional_bound(const SequenceDistribution& p, const SequenceDistribution& q,
                            std::size_t samples_per_length, Rng& rng) {
  return tv_bound_from_gap(p.horizon(), p.num_obs(), conditional_gap_sampled(p, q, samples_per_length, rng));
}

namespace {

/// Rows of Pr[F_t | H] scaled by d^{-1/2}, with zero-average futures removed.
Eigen::MatrixXd preconditioned_rows(const Eigen::MatrixXd& p_hist, const Eigen::VectorXd& d) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > 0.0) keep.push_back(i);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), p_hist.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = p_hist.row(keep[k]) / std::sqrt(d(keep[k]));
  return out;
}

std::vector<double> squared_singular_values(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return {};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.push_back(svd.singularValues()(i) * svd.singularValues()(i));
  return out;
}

double smallest_nonzero_of(const std::vector<double>& descending, double rel_cutoff) {
  const Eigen::VectorXd values =
      Eigen::Map<const Eigen::VectorXd>(descending.data(), static_cast<Eigen::Index>(descending.size()));
  return smallest_nonzero(values, rel_cutoff);
}

double fidelity_value(const Eigen::MatrixXd& p_hist, const Eigen::VectorXd& weights, const Eigen::MatrixXd& p_basis,
                      double rel_cutoff, std::vector<double>* spectrum = nullptr) {
  const Eigen::VectorXd d = p_basis.rowwise().mean();
  const Eigen::MatrixXd w = preconditioned_rows(p_hist, d) * weights.cwiseSqrt().asDiagonal();
  auto sv = squared_singular_values(w);
  const double s = smallest_nonzero_of(sv, rel_cutoff);
  if (spectrum) *spectrum = std::move(sv);
  return s;
}

}  // namespace

FidelityReport fidelity_for_bases(const SequenceDistribution& dist, const std::vector<Basis>& bases, double rel_cutoff,
                                  const EnumerationCap& cap) {
  const std::size_t horizon = dist.horizon();
  if (bases.size() != horizon + 1) throw std::invalid_argument("fidelity_for_bases: need T+1 bases");
  FidelityReport report;
  report.min_sigma_plus = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto m = cond_matrix(dist, t, FutureScheme::ExactLength, cap);
    const Eigen::VectorXd weights = prefix_probs(dist, t, cap);
    const Eigen::MatrixXd p_basis = cond_block(dist, bases[t].members, m.futures);
    FidelityLevel level;
    level.t = t;
    level.basis_size = bases[t].size();
    level.sigma_plus = fidelity_value(m.values, weights, p_basis, rel_cutoff, &level.spectrum);
    report.min_sigma_plus = std::min(report.min_sigma_plus, level.sigma_plus);
    report.max_basis_size = std::max(report.max_basis_size, level.basis_size);
    report.levels.push_back(std::move(level));
  }
  if (report.levels.empty()) report.min_sigma_plus = 0.0;
  return report;
}

double robust_sigma_at(const SequenceDistribution& dist, const Basis& basis, double rel_cutoff) {
  const auto futures = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd p = cond_block(dist, basis.members, futures);
  const Eigen::MatrixXd w = preconditioned_rows(p, p.rowwise().mean());
  return smallest_nonzero_of(squared_singular_values(w), rel_cutoff);
}

double robust_sigma(const SequenceDistribution& dist, const std::vector<Basis>& bases, double rel_cutoff) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < bases.size(); ++t) best = std::min(best, robust_sigma_at(dist, bases[t], rel_cutoff));
  return bases.size() > 1 ? best : 0.0;
}

Eigen::MatrixXd inner_covariance(const SequenceDistribution& dist, const Basis& basis) {
  const auto futures = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd p = cond_block(dist, basis.members, futures);
  const Eigen::MatrixXd w = preconditioned_rows(p, p.rowwise().mean());
  return w * w.transpose();
}

BasisSearchResult best_fidelity_search(const SequenceDistribution& dist, std::size_t max_size) {
  const std::size_t horizon = dist.horizon();
  if (horizon > 4) throw std::invalid_argument("best_fidelity_search: horizon must be at most 4");
  BasisSearchResult result;
  result.min_sigma_plus = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto m = cond_matrix(dist, t, FutureScheme::ExactLength);
    const Eigen::VectorXd weights = prefix_probs(dist, t);
    const int full_rank = numerical_rank(m.values, 1e-9);
    const std::size_t h = m.histories.size();
    BasisSearchLevel best{t, Basis{t, {}}, -1.0};
    std::vector<std::size_t> pick;
    // Multisets as non-decreasing index tuples.
    std::function<void(std::size_t)> visit = [&](std::size_t from) {
      if (!pick.empty()) {
        Eigen::MatrixXd pb(m.values.rows(), static_cast<Eigen::Index>(pick.size()));
        for (std::size_t k = 0; k < pick.size(); ++k) pb.col(static_cast<Eigen::Index>(k)) = m.values.col(static_cast<Eigen::Index>(pick[k]));
        if (numerical_rank(pb, 1e-9) == full_rank) {
          const double s = fidelity_value(m.values, weights, pb, 1e-10);
          if (s > best.sigma_plus) {
            best.sigma_plus = s;
            best.best.members.clear();
            for (auto idx : pick) best.best.members.push_back(m.histories[idx]);
          }
        }
      }
      if (pick.size() == max_size) return;
      for (std::size_t j = from; j < h; ++j) {
        pick.push_back(j);
        visit(j);
        pick.pop_back();
      }
    };
    visit(0);
    result.min_sigma_plus = std::min(result.min_sigma_plus, best.sigma_plus);
    result.max_basis_size = std::max(result.max_basis_size, best.best.size());
    result.levels.push_back(std::move(best));
  }
  return result;
}

Eigen::MatrixXd pair_marginal(const SequenceDistribution& dist) {
  if (dist.horizon() < 2) throw std::invalid_argument("pair_marginal: horizon must be at least 2");
  const int o = dist.num_obs();
  Eigen::MatrixXd p(o, o);
  for (Symbol first = 1; first <= o; ++first) {
    for (Symbol second = 1; second <= o; ++second) {
      p(second - 1, first - 1) = dist.conditional_prob(ObsSeq{}, ObsSeq{first, second});
    }
  }
  return p;
}

double one_step_fidelity(const SequenceDistribution& dist, double rel_cutoff) {
  if (dist.horizon() < 2) throw std::invalid_argument("one_step_fidelity: horizon must be at least 2");
  const int o = dist.num_obs();
  Eigen::MatrixXd next(o, o);  // column j = Pr[· | j]
  Eigen::VectorXd weights(o);
  for (Symbol j = 1; j <= o; ++j) {
    const auto p = dist.next_symbol_probs(ObsSeq{j});
    for (int i = 0; i < o; ++i) next(i, j - 1) = p[static_cast<std::size_t>(i)];
    weights(j - 1) = dist.conditional_prob(ObsSeq{}, ObsSeq{j});
  }
  return fidelity_value(next, weights, next, rel_cutoff);
}

double irregular_mass(const SequenceDistribution& dist, const ObsSeq& history, double alpha) {
  double mass = 0.0;
  std::function<void(const ObsSeq&, double)> walk = [&](const ObsSeq& h, double weight) {
    if (h.size() == dist.horizon() || weight <= 0.0) return;
    const auto p = dist.next_symbol_probs(h);
    for (Symbol o = 1; o <= dist.num_obs(); ++o) {
      const double c = p[static_cast<std::size_t>(o - 1)];
      if (c <= alpha) {
        mass += weight * c;
      } else {
        walk(h.appended(o), weight * c);
      }
    }
  };
  walk(history, 1.0);
  return mass;
}

}  // namespace oomlearn
