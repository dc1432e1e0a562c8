#include "oomlearn/generators.hpp"

#include "oomlearn/linalg.hpp"

namespace oomlearn {

namespace {

Eigen::VectorXd dirichlet(Eigen::Index size, double concentration, Rng& rng) {
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.gamma(concentration);
  const double s = v.sum();
  if (!(s > 0.0)) return Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
  return v / s;
}

Eigen::MatrixXd dirichlet_columns(Eigen::Index rows, Eigen::Index cols, double concentration, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = dirichlet(rows, concentration, rng);
  return m;
}

double sigma_min(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

}  // namespace

Hmm make_parity_hmm(std::size_t horizon, const std::set<std::size_t>& subset, double alpha) {
  if (horizon < 2) throw std::invalid_argument("make_parity_hmm: horizon must be at least 2");
  if (!(alpha >= 0.0) || alpha >= 0.5) throw std::invalid_argument("make_parity_hmm: α must lie in [0, 1/2)");
  if (subset.empty()) throw std::invalid_argument("make_parity_hmm: I must be nonempty");
  for (auto i : subset) {
    if (i < 1 || i >= horizon) throw std::invalid_argument("make_parity_hmm: I must lie in [1, T-1]");
  }
  const auto states = static_cast<Eigen::Index>(4 * horizon);
  auto index = [](std::size_t t, int b, int z) { return static_cast<Eigen::Index>(4 * (t - 1) + 2 * b + z); };

  Eigen::VectorXd initial = Eigen::VectorXd::Zero(states);
  initial(index(1, 0, 0)) = 0.5;
  initial(index(1, 0, 1)) = 0.5;

  Eigen::MatrixXd emission = Eigen::MatrixXd::Zero(2, states);
  for (std::size_t t = 1; t <= horizon; ++t) {
    for (int b = 0; b < 2; ++b) {
      for (int z = 0; z < 2; ++z) emission(z, index(t, b, z)) = 1.0;
    }
  }

  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(states, states);
  for (std::size_t t = 1; t < horizon; ++t) {
    for (int b = 0; b < 2; ++b) {
      for (int z = 0; z < 2; ++z) {
        const int next_b = subset.count(t) ? (b ^ z) : b;
        const Eigen::Index from = index(t, b, z);
        if (t + 1 < horizon) {
          transition(index(t + 1, next_b, 0), from) = 0.5;
          transition(index(t + 1, next_b, 1), from) = 0.5;
        } else {
          transition(index(t + 1, next_b, next_b), from) = 1.0 - alpha;
          transition(index(t + 1, next_b, 1 - next_b), from) += alpha;
        }
      }
    }
  }
  for (int b = 0; b < 2; ++b) {
    for (int z = 0; z < 2; ++z) transition(index(horizon, b, z), index(horizon, b, z)) = 1.0;
  }
  return Hmm(std::move(initial), std::move(emission), std::move(transition), horizon);
}

std::vector<Basis> parity_class_bases(std::size_t horizon, const std::set<std::size_t>& subset) {
  std::vector<Basis> bases;
  bases.push_back(initial_basis());
  for (std::size_t t = 1; t < horizon; ++t) {
    ObsSeq even = ObsSeq::repeat(1, t);
    Basis basis{t, {even}};
    const auto first = subset.begin();
    if (*first <= t) {
      ObsSeq odd = even;
      std::vector<Symbol> symbols(odd.begin(), odd.end());
      symbols[*first - 1] = 2;
      basis.members.emplace_back(std::move(symbols));
    }
    bases.push_back(std::move(basis));
  }
  bases.push_back(terminal_basis(horizon));
  return bases;
}

Hmm random_hmm(std::size_t states, int num_obs, std::size_t horizon, Rng& rng, double concentration) {
  if (states == 0 || num_obs < 1) throw std::invalid_argument("random_hmm: empty state or observation space");
  const auto s = static_cast<Eigen::Index>(states);
  Eigen::VectorXd initial = dirichlet(s, concentration, rng);
  Eigen::MatrixXd emission = dirichlet_columns(num_obs, s, concentration, rng);
  Eigen::MatrixXd transition = dirichlet_columns(s, s, concentration, rng);
  return Hmm(std::move(initial), std::move(emission), std::move(transition), horizon);
}

Hmm make_full_rank_hmm(std::size_t states, int num_obs, std::size_t horizon, std::uint64_t seed, double sigma_floor) {
  if (states == 0 || static_cast<std::size_t>(num_obs) < states) {
    throw std::invalid_argument("make_full_rank_hmm: need 1 ≤ S ≤ O");
  }
  Rng rng(seed);
  const auto s = static_cast<Eigen::Index>(states);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Eigen::MatrixXd emission = dirichlet_columns(num_obs, s, 1.0, rng);
    Eigen::MatrixXd transition = dirichlet_columns(s, s, 1.0, rng);
    Eigen::VectorXd initial = dirichlet(s, 1.0, rng);
    if (sigma_min(emission) >= sigma_floor && sigma_min(transition) >= sigma_floor) {
      return Hmm(std::move(initial), std::move(emission), std::move(transition), horizon);
    }
  }
  throw RejectionCapExceeded("make_full_rank_hmm: no draw met the σ_min floor in 10^4 tries");
}

Hmm make_overcomplete_hmm(std::size_t states, int num_obs, std::size_t horizon, std::uint64_t seed) {
  if (num_obs < 1 || static_cast<std::size_t>(num_obs) >= states) {
    throw std::invalid_argument("make_overcomplete_hmm: need 1 ≤ O < S");
  }
  Rng rng(seed);
  return random_hmm(states, num_obs, horizon, rng);
}

}  // namespace oomlearn
