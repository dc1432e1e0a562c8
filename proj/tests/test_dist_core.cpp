#include <doctest.h>

#include <map>
#include <sstream>

#include "oomlearn/generators.hpp"
#include "oomlearn/linalg.hpp"
#include "oomlearn/table_dist.hpp"
#include "test_support.hpp"

using namespace oomlearn;
using oomlearn::testing::path_sum_belief;
using oomlearn::testing::path_sum_joint;

namespace {

Hmm fair_coin(std::size_t horizon) {
  return Hmm(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(2, 1, 0.5), Eigen::MatrixXd::Ones(1, 1), horizon);
}

Hmm deterministic_emitter(Symbol o, int num_obs, std::size_t horizon) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(num_obs, 1);
  e(o - 1, 0) = 1.0;
  return Hmm(Eigen::VectorXd::Ones(1), e, Eigen::MatrixXd::Ones(1, 1), horizon);
}

}  // namespace

TEST_CASE("obs_seq basics") {
  const ObsSeq x{1, 2, 1};
  CHECK(x.to_string() == "(1,2,1)");
  CHECK(ObsSeq{}.to_string() == "()");
  CHECK(ObsSeq::parse("(1,2,1)") == x);
  CHECK(ObsSeq::parse("()") == ObsSeq{});
  CHECK(x.prefix(2) == ObsSeq{1, 2});
  CHECK(x.suffix_from(1) == ObsSeq{2, 1});
  CHECK(x.appended(3) == ObsSeq{1, 2, 1, 3});
  CHECK(x.prepended(2) == ObsSeq{2, 1, 2, 1});
  CHECK(ObsSeq{1} + ObsSeq{2, 2} == ObsSeq{1, 2, 2});
  CHECK_THROWS_AS(ObsSeq{0}.validate(2), std::invalid_argument);
  CHECK_THROWS_AS(ObsSeq{3}.validate(2), std::invalid_argument);

  const auto all = enumerate_sequences(3, 3);
  REQUIRE(all.size() == 27);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(lex_index(all[i], 3) == i);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1] < all[i]);
  CHECK(enumerate_up_to(2, 2).size() == 7);
  CHECK_THROWS_AS((void)count_sequences(2, 80), std::overflow_error);
}

TEST_CASE("joint_prob examples") {
  CHECK(fair_coin(3).joint_prob(ObsSeq{1, 2, 1}) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(deterministic_emitter(2, 3, 4).joint_prob(ObsSeq{2, 2, 2, 2}) == 1.0);

  const auto parity = make_parity_hmm(3, {1, 2}, 0.2);
  CHECK(parity.joint_prob(ObsSeq{2, 1, 2}) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(path_sum_joint(parity, ObsSeq{2, 1, 2}) == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS((void)parity.joint_prob(ObsSeq{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS((void)parity.joint_prob(ObsSeq{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("construction rejects non-stochastic parameters") {
  CHECK_THROWS_AS(Hmm(Eigen::VectorXd::Constant(1, 0.9), Eigen::MatrixXd::Constant(2, 1, 0.5),
                      Eigen::MatrixXd::Ones(1, 1), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(Hmm(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(2, 1, 0.6), Eigen::MatrixXd::Ones(1, 1), 2),
                  std::invalid_argument);
}

TEST_CASE("property: normalization, chain rule and path-sum equivalence on random HMMs") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t states = 1 + rng.uniform_index(3);
    const int num_obs = 2 + static_cast<int>(rng.uniform_index(2));
    const std::size_t horizon = 1 + rng.uniform_index(5);
    const Hmm hmm = random_hmm(states, num_obs, horizon, rng, 0.5 + rng.uniform());
    CAPTURE(trial);

    double total = 0.0;
    for (const auto& x : enumerate_sequences(num_obs, horizon)) {
      const double p = hmm.joint_prob(x);
      total += p;
      CHECK(std::abs(p - path_sum_joint(hmm, x)) <= 1e-10);
    }
    CHECK(std::abs(total - 1.0) <= 1e-8);

    for (std::size_t t = 0; t < horizon; ++t) {
      for (const auto& h : enumerate_sequences(num_obs, t)) {
        for (const auto& f : enumerate_sequences(num_obs, horizon - t)) {
          const double p_o = hmm.conditional_prob(h, ObsSeq{f[0]});
          if (p_o <= 0.0) continue;
          const double lhs = hmm.conditional_prob(h, f);
          const double rhs = p_o * hmm.conditional_prob(h.appended(f[0]), f.suffix_from(1));
          CHECK(std::abs(lhs - rhs) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("filter matches Bayes enumeration over paths") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Hmm hmm = random_hmm(3, 2, 5, rng);
    for (const auto& h : enumerate_sequences(2, 4)) {
      const auto result = hmm.filter(h);
      CHECK((result.belief.probs - path_sum_belief(hmm, h)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::exp(result.log_prob) == doctest::Approx(hmm.conditional_prob(ObsSeq{}, h)).epsilon(1e-10));
    }
  }
  const Hmm one = fair_coin(3);
  CHECK(one.filter(ObsSeq{1, 2}).belief.probs(0) == 1.0);
  const Hmm h = random_hmm(3, 2, 4, rng);
  const auto empty = h.filter(ObsSeq{});
  CHECK(empty.log_prob == 0.0);
  CHECK((empty.belief.probs - h.initial()).norm() == 0.0);
}

TEST_CASE("zero-probability histories use the uniform belief") {
  // State 1 always emits 1 and stays put; an observed 2 is impossible.
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  Eigen::MatrixXd emission = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd transition(2, 2);
  transition << 1.0, 0.3, 0.0, 0.7;
  const Hmm hmm(mu, emission, transition, 3);
  const auto f = hmm.filter(ObsSeq{2});
  CHECK(std::isinf(f.log_prob));
  CHECK(f.belief.probs(0) == doctest::Approx(0.5));
  // Forward computation seeded with the uniform belief over the next state.
  const double expected_2 = 0.5 * 1.0 * 0.7 + 0.0;
  CHECK(hmm.conditional_prob(ObsSeq{2}, ObsSeq{2}) == doctest::Approx(0.5));
  CHECK(hmm.conditional_prob(ObsSeq{2}, ObsSeq{2, 2}) == doctest::Approx(expected_2));
  CHECK(hmm.conditional_prob(ObsSeq{1, 1, 1}, ObsSeq{}) == 1.0);
  CHECK(hmm.conditional_prob(ObsSeq{2, 2, 2}, ObsSeq{}) == 1.0);
}

TEST_CASE("sampler passes a chi-square test against conditional_prob") {
  Rng gen(17);
  const Hmm hmm = random_hmm(3, 2, 4, gen);
  const ObsSeq history{2};
  const auto futures = enumerate_sequences(2, 3);
  std::map<ObsSeq, double> counts;
  Rng rng(99);
  const std::size_t draws = 100000;
  for (const auto& f : hmm.sample_conditional_batch(history, draws, rng)) counts[f] += 1.0;
  double stat = 0.0;
  for (const auto& f : futures) {
    const double expected = draws * hmm.conditional_prob(history, f);
    stat += (counts[f] - expected) * (counts[f] - expected) / expected;
  }
  CHECK(stat < oomlearn::testing::chi_square_quantile(static_cast<double>(futures.size() - 1), 3.09));

  Rng a(3), b(3);
  CHECK(hmm.sample_conditional(history, a) == hmm.sample_conditional(history, b));
  CHECK(hmm.sample_conditional(ObsSeq{1, 2, 1, 1}, a).empty());
}

TEST_CASE("fair-coin futures of length two are uniform") {
  const Hmm coin = fair_coin(2);
  Rng rng(1);
  std::map<ObsSeq, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[coin.sample_conditional(ObsSeq{}, rng)]++;
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  for (const auto& f : enumerate_sequences(2, 2)) CHECK(std::abs(counts[f] - 0.25 * draws) <= 3 * sd);
}

TEST_CASE("cond_matrix shapes and examples") {
  const auto parity = make_parity_hmm(5, {1, 3}, 0.2);
  const auto last = cond_matrix(parity, 5, FutureScheme::ExactLength);
  CHECK(last.values.rows() == 1);
  CHECK(last.values.cols() == 32);
  CHECK((last.values.array() == 1.0).all());

  for (std::size_t t = 1; t < 5; ++t) {
    const auto m = cond_matrix(parity, t, FutureScheme::ExactLength);
    CHECK(m.values.colwise().sum().isOnes(1e-12));
    std::vector<Eigen::VectorXd> distinct;
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      bool seen = false;
      for (const auto& d : distinct) seen = seen || (d - m.values.col(j)).norm() < 1e-12;
      if (!seen) distinct.push_back(m.values.col(j));
    }
    CHECK(distinct.size() == 2);
  }
  const auto up_to = cond_matrix(parity, 3, FutureScheme::UpToLength);
  CHECK(up_to.futures.size() == 7);
  CHECK(up_to.futures.front().empty());
  CHECK(futures_at(2, 5, 3, FutureScheme::ExactLength).size() == 4);

  const TableDist table = TableDist::from_distribution(parity);
  for (std::size_t t = 0; t <= 5; ++t) {
    const auto a = cond_matrix(parity, t, FutureScheme::UpToLength);
    const auto b = cond_matrix(table, t, FutureScheme::UpToLength);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK_THROWS_AS((void)cond_matrix(parity, 3, FutureScheme::ExactLength, EnumerationCap{16}), EnumerationCapExceeded);
}

TEST_CASE("rank_of examples") {
  CHECK(rank_of(fair_coin(4)) == 1);
  CHECK(rank_of(make_parity_hmm(6, {1, 3}, 0.2)) == 2);
  Rng rng(8);
  for (int i = 0; i < 5; ++i) CHECK(rank_of(random_hmm(3, 3, 4, rng)) <= 3);
}

TEST_CASE("table distributions") {
  const TableDist point = TableDist::from_map(2, 2, {{ObsSeq{1, 1}, 1.0}});
  CHECK(point.joint_prob(ObsSeq{1, 1}) == 1.0);
  CHECK(point.conditional_prob(ObsSeq{1}, ObsSeq{1}) == 1.0);
  CHECK_THROWS_AS((void)point.conditional_prob(ObsSeq{2}, ObsSeq{1}), ZeroProbabilityHistory);
  CHECK_THROWS_AS(TableDist(2, 1, {0.3, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(TableDist(2, 1, {1.2, -0.2}), std::invalid_argument);
}

TEST_CASE("HMM files round-trip bit-exactly") {
  Rng rng(21);
  const Hmm hmm = random_hmm(3, 2, 4, rng);
  std::stringstream buffer;
  write_hmm(buffer, hmm);
  const Hmm back = read_hmm(buffer);
  CHECK(back.horizon() == hmm.horizon());
  CHECK(back.initial() == hmm.initial());
  CHECK(back.emission() == hmm.emission());
  CHECK(back.transition() == hmm.transition());
}

TEST_CASE("numerical rank tolerance") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, 1e-12;
  CHECK(numerical_rank(a) == 1);
  CHECK(numerical_rank(a, 1e-13) == 2);
  CHECK(numerical_rank(Eigen::MatrixXd::Zero(3, 3)) == 0);
}
