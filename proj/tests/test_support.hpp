#pragma once

// Independent reference computations shared by the unit tests and the acceptance run.

#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "oomlearn/exact_learner.hpp"
#include "oomlearn/hmm.hpp"
#include "oomlearn/linalg.hpp"
#include "oomlearn/obs_seq.hpp"
#include "oomlearn/rng.hpp"

namespace oomlearn::testing {

/// Σ over all hidden paths s_1..s_T of μ(s_1) Π O[x_t, s_t] T[s_{t+1}, s_t].
inline double path_sum_joint(const Hmm& hmm, const ObsSeq& seq) {
  const int s_count = hmm.num_states();
  double total = 0.0;
  std::vector<int> path(seq.size(), 0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t t, double weight) {
    if (weight == 0.0) return;
    if (t == seq.size()) {
      total += weight;
      return;
    }
    for (int s = 0; s < s_count; ++s) {
      double w = weight * hmm.emission()(seq[t] - 1, s);
      w *= t == 0 ? hmm.initial()(s) : hmm.transition()(s, path[t - 1]);
      path[t] = s;
      walk(t + 1, w);
    }
  };
  walk(0, 1.0);
  return total;
}

/// Pr[s_{t+1} = · | history] by summing over paths, for histories of positive probability.
inline Eigen::VectorXd path_sum_belief(const Hmm& hmm, const ObsSeq& history) {
  const int s_count = hmm.num_states();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s_count);
  std::vector<int> path(history.size(), 0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t t, double weight) {
    if (weight == 0.0) return;
    if (t == history.size()) {
      for (int s = 0; s < s_count; ++s) {
        out(s) += weight * (history.empty() ? hmm.initial()(s) : hmm.transition()(s, path[t - 1]));
      }
      return;
    }
    for (int s = 0; s < s_count; ++s) {
      double w = weight * hmm.emission()(history[t] - 1, s);
      w *= t == 0 ? hmm.initial()(s) : hmm.transition()(s, path[t - 1]);
      path[t] = s;
      walk(t + 1, w);
    }
  };
  walk(0, 1.0);
  return out / out.sum();
}

/// Noisy parity by its closed form: the first T−1 bits are uniform and the last bit
/// matches the parity of the bits in I with probability 1−α.
inline double parity_formula(const ObsSeq& seq, const std::set<std::size_t>& subset, double alpha) {
  int parity = 0;
  for (auto i : subset) parity ^= seq[i - 1] - 1;
  const int last = seq.back() - 1;
  return std::pow(0.5, static_cast<double>(seq.size() - 1)) * (last == parity ? 1.0 - alpha : alpha);
}

inline Eigen::VectorXd random_simplex(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}

/// Upper quantile of the chi-square distribution via the Wilson–Hilferty transform.
inline double chi_square_quantile(double dof, double z) {
  const double a = 2.0 / (9.0 * dof);
  return dof * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

struct RankStep {
  std::size_t tau = 0;
  int before = 0;
  int after = 0;
};

/// Re-derives, from the distribution itself, the rank of Pr[Λ_τ | B_τ] just before
/// and just after each recorded update. Members and tests are appended in update
/// order, so the k-th update at τ leaves the leading (k+2)×(k+2) block.
inline std::vector<RankStep> audit_rank_growth(const SequenceDistribution& dist, const ExactLearnResult& result) {
  std::vector<RankStep> out;
  std::vector<std::size_t> seen(result.state.horizon + 1, 0);
  for (const auto& up : result.updates) {
    const std::size_t size = ++seen[up.tau] + 1;
    const auto& members = result.state.bases[up.tau].members;
    const auto& tests = result.state.tests[up.tau];
    Eigen::MatrixXd table(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist.conditional_prob(members[j], tests[i]);
      }
    }
    const auto k = static_cast<Eigen::Index>(size - 1);
    out.push_back({up.tau, numerical_rank(table.topLeftCorner(k, k), 1e-9), numerical_rank(table, 1e-9)});
  }
  return out;
}

}  // namespace oomlearn::testing
