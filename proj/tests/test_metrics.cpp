#include <doctest.h>

#include <algorithm>
#include <memory>

#include "oomlearn/generators.hpp"
#include "oomlearn/metrics.hpp"
#include "oomlearn/precond.hpp"
#include "oomlearn/table_dist.hpp"
#include "test_support.hpp"

using namespace oomlearn;

namespace {

// Smallest eigenvalue above cutoff of S^{1/2} Pᵀ D⁻¹ P S^{1/2}, formed directly.
double reference_fidelity(const SequenceDistribution& dist, const Basis& basis) {
  const std::size_t t = basis.t;
  const auto histories = enumerate_sequences(dist.num_obs(), t);
  const auto futures = enumerate_sequences(dist.num_obs(), dist.horizon() - t);
  const auto h = static_cast<Eigen::Index>(histories.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(h, h);
  for (const auto& f : futures) {
    double d = 0.0;
    for (const auto& b : basis.members) d += dist.conditional_prob(b, f);
    d /= static_cast<double>(basis.size());
    if (d <= 0.0) continue;
    Eigen::VectorXd row(h);
    for (Eigen::Index j = 0; j < h; ++j) {
      const auto& x = histories[static_cast<std::size_t>(j)];
      const double px = dist.conditional_prob(ObsSeq{}, x);
      row(j) = px > 0.0 ? std::sqrt(px) * dist.conditional_prob(x, f) : 0.0;
    }
    m += row * row.transpose() / d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  double best = top;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-10 * top) best = std::min(best, ev(i));
  }
  return best;
}

TableDist point_mass(int o, std::size_t horizon, const ObsSeq& at) {
  return TableDist::from_map(o, horizon, {{at, 1.0}});
}

}  // namespace

TEST_CASE("tv_exact") {
  const TableDist uniform(2, 2, {0.25, 0.25, 0.25, 0.25});
  const TableDist point = point_mass(2, 2, ObsSeq{1, 1});
  CHECK(tv_exact(uniform, uniform) == 0.0);
  CHECK(tv_exact(uniform, point) == doctest::Approx(0.75));
  CHECK(tv_exact(point, uniform) == doctest::Approx(0.75));

  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Hmm a = random_hmm(2, 2, 4, rng);
    const Hmm b = random_hmm(3, 2, 4, rng);
    const Hmm c = random_hmm(2, 2, 4, rng);
    CHECK(tv_exact(a, b) == doctest::Approx(tv_exact(b, a)).epsilon(1e-12));
    CHECK(tv_exact(a, c) <= tv_exact(a, b) + tv_exact(b, c) + 1e-12);
    CHECK(tv_exact(a, b) <= 1.0 + 1e-12);
  }

  // ½ E_p|1 − q/p| by Monte Carlo.
  const Hmm a = random_hmm(2, 2, 5, rng);
  const Hmm b = random_hmm(2, 2, 5, rng);
  const auto draws = a.sample_conditional_batch(ObsSeq{}, 40000, rng);
  double acc = 0.0;
  for (const auto& x : draws) acc += std::abs(1.0 - b.joint_prob(x) / a.joint_prob(x));
  CHECK(std::abs(0.5 * acc / 40000.0 - tv_exact(a, b)) <= 0.02);
}

TEST_CASE("tv against a raw model") {
  Rng rng(2);
  const Hmm hmm = random_hmm(3, 2, 4, rng);
  const OomModel model = construct_exact_operators(hmm, greedy_bases(hmm));
  CHECK(tv_exact(hmm, model) <= 1e-10);
  const TableDist uniform(2, 4, std::vector<double>(16, 1.0 / 16.0));
  CHECK(tv_exact(uniform, model) == doctest::Approx(tv_exact(uniform, hmm)).epsilon(1e-9));
}

TEST_CASE("conditional gap bounds tv") {
  Rng rng(3);
  const Hmm p = random_hmm(3, 2, 5, rng);
  Rng sample_rng(4);
  CHECK(conditional_gap_sampled(p, p, 500, sample_rng) == 0.0);
  CHECK(conditional_gap_exact(p, p) == 0.0);
  CHECK(tv_bound_from_gap(5, 2, 0.1) == doctest::Approx(0.6));
  for (int trial = 0; trial < 20; ++trial) {
    const Hmm q = random_hmm(3, 2, 5, rng);
    const double gap = conditional_gap_exact(p, q);
    CHECK(tv_exact(p, q) <= tv_bound_from_gap(5, 2, gap) + 1e-12);
    Rng r(static_cast<std::uint64_t>(trial));
    CHECK(std::abs(conditional_gap_sampled(p, q, 20000, r) - gap) <= 0.05);
  }
  // A small perturbation of the emissions gives a small, sound bound.
  Eigen::MatrixXd e = p.emission();
  e.col(0) = (1.0 - 1e-3) * e.col(0) + 1e-3 * Eigen::VectorXd::Constant(2, 0.5);
  const Hmm near(p.initial(), e, p.transition(), 5);
  Rng r(9);
  const double bound = tv_conditional_bound(p, near, 20000, r);
  CHECK(bound <= 0.05);
  CHECK(tv_exact(p, near) <= tv_bound_from_gap(5, 2, conditional_gap_exact(p, near)) + 1e-12);
}

TEST_CASE("fidelity matches a direct eigen-decomposition") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Hmm hmm = random_hmm(2, 2, 4, rng);
    const auto bases = greedy_bases(hmm);
    const auto report = fidelity_for_bases(hmm, bases);
    REQUIRE(report.levels.size() == 4);
    double smallest = 1e300;
    for (std::size_t t = 1; t <= 4; ++t) {
      const double ref = reference_fidelity(hmm, bases[t]);
      CHECK(report.levels[t - 1].sigma_plus == doctest::Approx(ref).epsilon(1e-8));
      smallest = std::min(smallest, ref);
    }
    CHECK(report.min_sigma_plus == doctest::Approx(smallest).epsilon(1e-8));
  }
}

TEST_CASE("fidelity of simple families") {
  SUBCASE("one state") {
    Eigen::MatrixXd e(2, 1);
    e << 0.3, 0.7;
    const Hmm iid(Eigen::VectorXd::Ones(1), e, Eigen::MatrixXd::Ones(1, 1), 4);
    const auto report = fidelity_for_bases(iid, greedy_bases(iid));
    CHECK(report.min_sigma_plus == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(report.max_basis_size == 1);
  }
  SUBCASE("noisy parity") {
    for (double alpha : {0.1, 0.2, 0.25, 0.3}) {
      const std::set<std::size_t> subset{1, 3};
      const Hmm hmm = make_parity_hmm(5, subset, alpha);
      const auto bases = parity_class_bases(5, subset);
      const auto report = fidelity_for_bases(hmm, bases);
      const double c = (1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha);
      // Measured value is (1−2α)² with at most two members per basis.
      CHECK(report.min_sigma_plus == doctest::Approx(c).epsilon(1e-9));
      CHECK(report.max_basis_size == 2);
      // Two-member levels give 2(1−2α)²; the singleton B_T level gives 1.
      CHECK(robust_sigma(hmm, bases) == doctest::Approx(std::min(1.0, 2.0 * c)).epsilon(1e-9));
    }
  }
  SUBCASE("one-step fidelity dominates the pair marginal") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Hmm hmm = make_full_rank_hmm(3, 3, 4, seed, 0.1);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(pair_marginal(hmm)).singularValues();
      const double s = sv(sv.size() - 1);
      CHECK(one_step_fidelity(hmm) >= s * s - 1e-12);
    }
  }
}

TEST_CASE("robust sigma") {
  Rng rng(6);
  const Hmm hmm = random_hmm(3, 2, 4, rng);
  const Basis single{2, {ObsSeq{1, 2}}};
  CHECK(robust_sigma_at(hmm, single) == doctest::Approx(1.0).epsilon(1e-10));

  const Basis pair{2, {ObsSeq{1, 1}, ObsSeq{2, 1}}};
  const double base = robust_sigma_at(hmm, pair);
  for (std::size_t k : {2, 3, 5}) {
    Basis dup{2, {}};
    for (const auto& b : pair.members) dup.members.insert(dup.members.end(), k, b);
    CHECK(robust_sigma_at(hmm, dup) == doctest::Approx(static_cast<double>(k) * base).epsilon(1e-9));
  }

  const Basis three{2, {ObsSeq{1, 1}, ObsSeq{2, 1}, ObsSeq{2, 2}}};
  Basis shuffled = three;
  std::reverse(shuffled.members.begin(), shuffled.members.end());
  CHECK(robust_sigma_at(hmm, shuffled) == doctest::Approx(robust_sigma_at(hmm, three)).epsilon(1e-10));
  std::vector<Basis> bases_a = greedy_bases(hmm);
  std::vector<Basis> bases_b = bases_a;
  bases_a[2] = three;
  bases_b[2] = shuffled;
  CHECK(fidelity_for_bases(hmm, bases_a).min_sigma_plus ==
        doctest::Approx(fidelity_for_bases(hmm, bases_b).min_sigma_plus).epsilon(1e-10));

  // Σ_B and the inner covariance share their nonzero spectrum.
  const Eigen::VectorXd a = symmetric_spectrum(exact_sigma(hmm, three)).values;
  const Eigen::VectorXd b = symmetric_spectrum(inner_covariance(hmm, three)).values;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > 1e-10) CHECK(a(i) == doctest::Approx(b(i)).epsilon(1e-9));
  }
}

TEST_CASE("best fidelity search") {
  const std::set<std::size_t> subset{1, 2};
  const Hmm hmm = make_parity_hmm(4, subset, 0.2);
  const auto search = best_fidelity_search(hmm, 2);
  const auto classes = fidelity_for_bases(hmm, parity_class_bases(4, subset));
  CHECK(search.min_sigma_plus >= classes.min_sigma_plus - 1e-12);
  CHECK(search.max_basis_size <= 2);
  CHECK_THROWS_AS((void)best_fidelity_search(make_parity_hmm(5, subset, 0.2)), std::invalid_argument);
}

TEST_CASE("irregular mass") {
  Eigen::MatrixXd e(2, 1);
  e << 0.1, 0.9;
  const Hmm coin(Eigen::VectorXd::Ones(1), e, Eigen::MatrixXd::Ones(1, 1), 3);
  CHECK(irregular_mass(coin, ObsSeq{}, 0.2) == doctest::Approx(1.0 - 0.9 * 0.9 * 0.9).epsilon(1e-12));
  CHECK(irregular_mass(coin, ObsSeq{2}, 0.2) == doctest::Approx(1.0 - 0.9 * 0.9).epsilon(1e-12));
  CHECK(irregular_mass(coin, ObsSeq{}, 0.05) == 0.0);
}
