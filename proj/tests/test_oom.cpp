#include <doctest.h>

#include <sstream>

#include "oomlearn/generators.hpp"
#include "oomlearn/linalg.hpp"
#include "oomlearn/metrics.hpp"
#include "oomlearn/oom.hpp"
#include "oomlearn/precond.hpp"
#include "test_support.hpp"

using namespace oomlearn;

namespace {

/// max |Pr[F_{t+1}|B_{t+1}] A_{o,t} − Pr[oF_{t+1}|B_t]| over all t and o.
double operator_residual(const SequenceDistribution& dist, const OomModel& model) {
  double worst = 0.0;
  for (std::size_t t = 0; t < model.horizon(); ++t) {
    const auto futures = futures_at(dist.num_obs(), dist.horizon(), t + 1, FutureScheme::ExactLength);
    const Eigen::MatrixXd next = cond_block(dist, model.basis(t + 1).members, futures);
    for (Symbol o = 1; o <= dist.num_obs(); ++o) {
      std::vector<ObsSeq> shifted;
      for (const auto& f : futures) shifted.push_back(f.prepended(o));
      const Eigen::MatrixXd target = cond_block(dist, model.basis(t).members, shifted);
      worst = std::max(worst, (next * model.op(t, o) - target).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

OomModel with_noise(const OomModel& model, double scale, Rng& rng) {
  auto ops = model.operators();
  for (auto& level : ops) {
    for (auto& a : level) {
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] += scale * rng.normal();
    }
  }
  return OomModel(model.num_obs(), model.horizon(), model.bases(), ops);
}

}  // namespace

TEST_CASE("property: exact operators reproduce every sequence probability") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t states = 1 + rng.uniform_index(4);
    const int num_obs = 2 + static_cast<int>(rng.uniform_index(2));
    const std::size_t horizon = 1 + rng.uniform_index(num_obs == 2 ? 6 : 5);
    const Hmm hmm = random_hmm(states, num_obs, horizon, rng);
    CAPTURE(trial);
    const auto bases = greedy_bases(hmm);
    for (std::size_t t = 1; t < horizon; ++t) CHECK(bases[t].size() <= states);
    const OomModel model = construct_exact_operators(hmm, bases);
    CHECK(operator_residual(hmm, model) < 1e-9);
    for (const auto& x : enumerate_sequences(num_obs, horizon)) {
      CHECK(std::abs(eval_prob(model, x) - hmm.joint_prob(x)) <= 1e-9);
    }
  }
}

TEST_CASE("single-state HMM gives scalar marginals") {
  Eigen::MatrixXd e(3, 1);
  e << 0.2, 0.5, 0.3;
  const Hmm hmm(Eigen::VectorXd::Ones(1), e, Eigen::MatrixXd::Ones(1, 1), 4);
  const OomModel model = construct_exact_operators(hmm, greedy_bases(hmm));
  for (std::size_t t = 0; t < 4; ++t) {
    for (Symbol o = 1; o <= 3; ++o) {
      REQUIRE(model.op(t, o).size() == 1);
      CHECK(model.op(t, o)(0, 0) == doctest::Approx(e(o - 1, 0)).epsilon(1e-12));
    }
  }
  CHECK(eval_prob(model, ObsSeq{1, 2, 3, 2}) == doctest::Approx(0.2 * 0.5 * 0.3 * 0.5).epsilon(1e-12));
}

TEST_CASE("degenerate and zero models") {
  std::vector<Basis> bases{initial_basis(), terminal_basis(1)};
  std::vector<std::vector<Eigen::MatrixXd>> ops{{Eigen::MatrixXd::Constant(1, 1, 0.7), Eigen::MatrixXd::Constant(1, 1, 0.3)}};
  const OomModel one(2, 1, bases, ops);
  CHECK(eval_prob(one, ObsSeq{1}) == 0.7);
  CHECK(eval_prob(one, ObsSeq{2}) == 0.3);

  const Hmm parity = make_parity_hmm(4, {1, 2}, 0.2);
  const OomModel exact = construct_exact_operators(parity, parity_class_bases(4, {1, 2}));
  auto zero_ops = exact.operators();
  for (auto& level : zero_ops) {
    for (auto& a : level) a.setZero();
  }
  const OomModel zero(2, 4, exact.bases(), zero_ops);
  for (const auto& x : enumerate_sequences(2, 4)) CHECK(eval_prob(zero, x) == 0.0);

  auto bad = exact.operators();
  bad[1][0] = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(OomModel(2, 4, exact.bases(), bad), std::invalid_argument);
}

TEST_CASE("parity class bases reproduce the joint distribution") {
  for (std::size_t horizon = 2; horizon <= 6; ++horizon) {
    const std::set<std::size_t> subset{1, horizon - 1};
    const Hmm parity = make_parity_hmm(horizon, subset, 0.2);
    const OomModel model = construct_exact_operators(parity, parity_class_bases(horizon, subset));
    for (const auto& x : enumerate_sequences(2, horizon)) {
      CHECK(std::abs(eval_prob(model, x) - parity.joint_prob(x)) <= 1e-9);
    }
  }
}

TEST_CASE("bases that do not span are rejected") {
  const Hmm parity = make_parity_hmm(4, {1, 2}, 0.2);
  std::vector<Basis> bases{initial_basis(), Basis{1, {ObsSeq{1}}}, Basis{2, {ObsSeq{1, 1}}},
                           Basis{3, {ObsSeq{1, 1, 1}}}, terminal_basis(4)};
  CHECK_THROWS_AS((void)construct_exact_operators(parity, bases), std::domain_error);
}

TEST_CASE("eval_prefix_tests") {
  const Hmm parity = make_parity_hmm(5, {1, 3}, 0.2);
  const OomModel model = construct_exact_operators(parity, parity_class_bases(5, {1, 3}));
  const std::vector<ObsSeq> tests{ObsSeq{1}, ObsSeq{2, 1}};
  for (std::size_t t = 0; t < 4; ++t) {
    const Eigen::MatrixXd table = cond_block(parity, model.basis(t).members, tests);
    if (t == 0) CHECK((eval_prefix_tests(model, ObsSeq{}, table) - table.col(0)).norm() == 0.0);
    for (const auto& x : enumerate_sequences(2, t)) {
      const Eigen::VectorXd predicted = eval_prefix_tests(model, x, table);
      for (std::size_t k = 0; k < tests.size(); ++k) {
        const double truth = parity.conditional_prob(ObsSeq{}, x + tests[k]);
        CHECK(std::abs(predicted(static_cast<Eigen::Index>(k)) - truth) <= 1e-9);
      }
    }
  }
  auto ops = model.operators();
  ops[1][1].setZero();
  const OomModel broken(2, 5, model.bases(), ops);
  const Eigen::MatrixXd table = cond_block(parity, model.basis(2).members, tests);
  bool differs = false;
  for (const auto& x : enumerate_sequences(2, 2)) {
    const Eigen::VectorXd predicted = eval_prefix_tests(broken, x, table);
    for (std::size_t k = 0; k < tests.size(); ++k) {
      differs = differs ||
                std::abs(predicted(static_cast<Eigen::Index>(k)) - parity.conditional_prob(ObsSeq{}, x + tests[k])) > 1e-9;
    }
  }
  CHECK(differs);
  CHECK_THROWS_AS((void)eval_prefix_tests(model, ObsSeq{1}, Eigen::MatrixXd::Ones(2, 5)), std::invalid_argument);
}

TEST_CASE("coefficient evolution") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Hmm hmm = random_hmm(3, 2, 5, rng);
    const auto bases = greedy_bases(hmm);
    const OomModel model = construct_exact_operators(hmm, bases);
    for (Symbol o = 1; o <= 2; ++o) {
      const double p = hmm.conditional_prob(ObsSeq{}, ObsSeq{o});
      const Coefficients b = evolve_coefficients(model, 0, Coefficients::Ones(1), o, p);
      CHECK((b - model.op(0, o) / p).norm() <= 1e-15);
    }
    for (std::size_t t = 0; t < 4; ++t) {
      for (const auto& h : enumerate_sequences(2, t)) {
        const Coefficients beta = exact_coefficients(hmm, bases[t], h);
        for (Symbol o = 1; o <= 2; ++o) {
          const double p = hmm.conditional_prob(h, ObsSeq{o});
          if (p <= 0.0) continue;
          const Coefficients evolved = evolve_coefficients(model, t, beta, o, p);
          CHECK(std::abs(evolved.sum() - 1.0) <= 1e-9);
          // Coefficients are unique modulo the kernel of Pr[F|B]; compare on its complement.
          const auto futures = futures_at(2, 5, t + 1, FutureScheme::ExactLength);
          const Eigen::MatrixXd pb = cond_block(hmm, bases[t + 1].members, futures);
          const Eigen::MatrixXd row_space = pseudo_inverse(pb) * pb;
          const Coefficients direct = exact_coefficients(hmm, bases[t + 1], h.appended(o));
          CHECK((row_space * evolved - direct).norm() <= 1e-8);
        }
      }
    }
  }
  const Hmm hmm = make_parity_hmm(3, {1}, 0.2);
  const OomModel model = construct_exact_operators(hmm, parity_class_bases(3, {1}));
  CHECK_THROWS_AS((void)evolve_coefficients(model, 0, Coefficients::Ones(1), 1, 0.0), std::domain_error);
}

TEST_CASE("kernel of Σ_B equals the kernel of Pr[F|B]") {
  Rng rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    const Hmm hmm = random_hmm(2, 2, 4, rng);
    Basis basis{2, enumerate_sequences(2, 2)};
    const auto futures = futures_at(2, 4, 2, FutureScheme::ExactLength);
    const Eigen::MatrixXd p = cond_block(hmm, basis.members, futures);
    const Eigen::MatrixXd k_sigma = null_space(exact_sigma(hmm, basis), 1e-9);
    const Eigen::MatrixXd k_p = null_space(p, 1e-9);
    CHECK(k_sigma.cols() == k_p.cols());
    CHECK((p * k_sigma).norm() < 1e-8);
    CHECK((exact_sigma(hmm, basis) * k_p).norm() < 1e-8);
  }
}

TEST_CASE("to_distribution") {
  const Hmm parity = make_parity_hmm(5, {1, 3}, 0.2);
  const OomModel exact = construct_exact_operators(parity, parity_class_bases(5, {1, 3}));
  const NormalizedModel proper = to_distribution(exact);
  CHECK(tv_exact(parity, proper) <= 1e-9);
  for (std::size_t t = 0; t < 5; ++t) {
    for (const auto& x : enumerate_sequences(2, t)) {
      const auto a = parity.next_symbol_probs(x);
      const auto b = proper.next_symbol_probs(x);
      for (std::size_t o = 0; o < 2; ++o) CHECK(std::abs(a[o] - b[o]) <= 1e-9);
    }
  }

  std::vector<std::vector<Eigen::MatrixXd>> ops{{Eigen::MatrixXd::Constant(1, 1, 1.3), Eigen::MatrixXd::Constant(1, 1, -0.3)}};
  const NormalizedModel clipped = to_distribution(OomModel(2, 1, {initial_basis(), terminal_basis(1)}, ops));
  CHECK(clipped.joint_prob(ObsSeq{1}) == 1.0);
  CHECK(clipped.joint_prob(ObsSeq{2}) == 0.0);

  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const NormalizedModel noisy = to_distribution(with_noise(exact, 1e-4, rng));
    CHECK(tv_exact(parity, noisy) <= 0.05);
    double total = 0.0;
    for (const auto& x : enumerate_sequences(2, 5)) {
      const double p = noisy.joint_prob(x);
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  // Heavy noise on a three-symbol model exercises clipping and renormalization.
  Rng gen(5);
  const Hmm three = random_hmm(2, 3, 3, gen);
  const NormalizedModel wild = to_distribution(with_noise(construct_exact_operators(three, greedy_bases(three)), 0.5, gen));
  double total = 0.0;
  for (const auto& x : enumerate_sequences(3, 3)) {
    const double p = wild.joint_prob(x);
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
  Rng draw(9);
  CHECK(wild.sample_conditional(ObsSeq{1}, draw).size() == 2);
}

TEST_CASE("model files round-trip") {
  Rng rng(2);
  const Hmm hmm = random_hmm(3, 2, 4, rng);
  const OomModel model = construct_exact_operators(hmm, greedy_bases(hmm));
  std::stringstream buffer;
  write_model(buffer, model);
  const OomModel back = read_model(buffer);
  REQUIRE(back.horizon() == model.horizon());
  for (std::size_t t = 0; t <= model.horizon(); ++t) CHECK(back.basis(t).members == model.basis(t).members);
  for (std::size_t t = 0; t < model.horizon(); ++t) {
    for (Symbol o = 1; o <= 2; ++o) CHECK(back.op(t, o) == model.op(t, o));
  }
}
