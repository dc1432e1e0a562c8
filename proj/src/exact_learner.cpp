#include "oomlearn/exact_learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

namespace {

double ask(LearnerState& state, OracleHandle& oracle, const ObsSeq& h, const ObsSeq& f) {
  if (f.empty()) return 1.0;
  auto key = std::make_pair(h, f);
  if (auto it = state.answers.find(key); it != state.answers.end()) return it->second;
  const double v = oracle.exact_query(h, f);
  state.answers.emplace(std::move(key), v);
  return v;
}

Eigen::FullPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& m, std::size_t t) {
  if (m.rows() != m.cols()) throw std::logic_error("test table at t=" + std::to_string(t) + " is not square");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw std::logic_error("test table at t=" + std::to_string(t) + " is singular");
  return lu;
}

}  // namespace

std::size_t default_sample_size(std::size_t horizon, std::size_t rank_hint, double epsilon, double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0) || delta >= 1.0) throw std::invalid_argument("default_sample_size: bad ε or δ");
  const double tr = static_cast<double>(std::max<std::size_t>(1, horizon * std::max<std::size_t>(1, rank_hint)));
  return static_cast<std::size_t>(std::ceil(8.0 * std::log(tr / delta) / (epsilon * epsilon)));
}

LearnerState init_state(OracleHandle& oracle) {
  LearnerState s;
  s.num_obs = oracle.num_obs();
  s.horizon = oracle.horizon();
  const std::size_t horizon = s.horizon;
  s.tests.resize(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) s.bases.push_back(Basis{t, {ObsSeq::repeat(1, t)}});
  for (std::size_t t = 0; t < horizon; ++t) {
    const ObsSeq& b = s.bases[t].members.front();
    for (Symbol o = 1; o <= s.num_obs; ++o) {
      if (ask(s, oracle, b, ObsSeq{o}) > 0.0) {
        s.tests[t].push_back(ObsSeq{o});
        break;
      }
    }
    if (s.tests[t].empty()) throw std::logic_error("init_state: no symbol has positive probability");
  }
  s.tests[horizon].push_back(ObsSeq{});
  s.test_values.assign(horizon + 1, Eigen::MatrixXd());
  s.shifted_values.assign(horizon, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(s.num_obs)));
  return s;
}

void refresh_tables(LearnerState& state, OracleHandle& oracle) {
  const std::size_t horizon = state.horizon;
  for (std::size_t t = 0; t <= horizon; ++t) {
    const auto& b = state.bases[t].members;
    const auto& tests = state.tests[t];
    Eigen::MatrixXd m(static_cast<Eigen::Index>(tests.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < tests.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ask(state, oracle, b[j], tests[i]);
      }
    }
    state.test_values[t] = std::move(m);
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto& b = state.bases[t].members;
    const auto& next_tests = state.tests[t + 1];
    for (Symbol o = 1; o <= state.num_obs; ++o) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(next_tests.size()), static_cast<Eigen::Index>(b.size()));
      for (std::size_t i = 0; i < next_tests.size(); ++i) {
        const ObsSeq f = next_tests[i].prepended(o);
        for (std::size_t j = 0; j < b.size(); ++j) {
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ask(state, oracle, b[j], f);
        }
      }
      state.shifted_values[t][static_cast<std::size_t>(o - 1)] = std::move(m);
    }
  }
}

OperatorSet solve_operators(LearnerState& state, OracleHandle& oracle) {
  refresh_tables(state, oracle);
  OperatorSet ops(state.horizon);
  for (std::size_t t = 0; t < state.horizon; ++t) {
    const auto lu = checked_lu(state.test_values[t + 1], t + 1);
    for (Symbol o = 1; o <= state.num_obs; ++o) {
      ops[t].push_back(lu.solve(state.shifted_values[t][static_cast<std::size_t>(o - 1)]));
    }
  }
  return ops;
}

Eigen::VectorXd predict_tests(const LearnerState& state, const OperatorSet& ops, const ObsSeq& prefix) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (std::size_t t = 0; t < prefix.size(); ++t) w = ops[t][static_cast<std::size_t>(prefix[t] - 1)] * w;
  return state.test_values[prefix.size()] * w;
}

Eigen::VectorXd oracle_tests(LearnerState& state, OracleHandle& oracle, const ObsSeq& prefix) {
  const auto& tests = state.tests[prefix.size()];
  Eigen::VectorXd out(static_cast<Eigen::Index>(tests.size()));
  for (std::size_t i = 0; i < tests.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = ask(state, oracle, ObsSeq{}, prefix + tests[i]);
  }
  return out;
}

std::optional<ObsSeq> find_counterexample(LearnerState& state, const OperatorSet& ops, OracleHandle& oracle,
                                          std::size_t n, double tol) {
  if (n == 0) throw std::invalid_argument("find_counterexample: n must be positive");
  for (std::size_t t = 1; t <= state.horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      ObsSeq x = oracle.sample_joint(t);
      const Eigen::VectorXd gap = predict_tests(state, ops, x) - oracle_tests(state, oracle, x);
      if (gap.cwiseAbs().maxCoeff() > tol) return x;
    }
  }
  return std::nullopt;
}

CounterexampleUpdate process_counterexample(LearnerState& state, const OperatorSet& ops, OracleHandle& oracle,
                                            const ObsSeq& counterexample, double tol) {
  for (std::size_t tau = 0; tau < counterexample.size(); ++tau) {
    const ObsSeq next = counterexample.prefix(tau + 1);
    const Eigen::VectorXd gap = predict_tests(state, ops, next) - oracle_tests(state, oracle, next);
    Eigen::Index row = 0;
    if (gap.cwiseAbs().maxCoeff(&row) <= tol) continue;

    CounterexampleUpdate up;
    up.counterexample = counterexample;
    up.tau = tau;
    up.new_history = counterexample.prefix(tau);
    up.new_test = state.tests[tau + 1][static_cast<std::size_t>(row)].prepended(counterexample[tau]);
    auto& members = state.bases[tau].members;
    auto& tests = state.tests[tau];
    if (std::find(members.begin(), members.end(), up.new_history) != members.end() ||
        std::find(tests.begin(), tests.end(), up.new_test) != tests.end()) {
      throw std::logic_error("process_counterexample: update repeats an existing history or test");
    }
    members.push_back(up.new_history);
    tests.push_back(up.new_test);
    refresh_tables(state, oracle);
    checked_lu(state.test_values[tau], tau);
    up.determinant = state.test_values[tau].determinant();
    ++state.rounds;
    return up;
  }
  throw std::invalid_argument("process_counterexample: " + counterexample.to_string() + " is not a counterexample");
}

TestTables test_tables(const LearnerState& state) {
  return TestTables{state.tests, state.test_values, std::vector<std::size_t>(state.horizon + 1, 0)};
}

ExactLearnResult learn_exact(OracleHandle& oracle, const ExactLearnerParams& params) {
  if (oracle.mode() != OracleMode::ExactProbability) throw WrongOracleMode("learn_exact needs the exact oracle");
  const std::uint64_t start = oracle.query_count();
  const std::size_t horizon = oracle.horizon();
  const std::size_t n = params.samples_per_length
                            ? params.samples_per_length
                            : default_sample_size(horizon, params.rank_hint, params.epsilon, params.delta);
  const std::size_t cap = params.max_rounds ? params.max_rounds : 64 * std::max<std::size_t>(1, horizon);

  LearnerState state = init_state(oracle);
  std::vector<CounterexampleUpdate> updates;
  OperatorSet ops;
  while (true) {
    ops = solve_operators(state, oracle);
    auto cx = find_counterexample(state, ops, oracle, n, params.equality_tol);
    if (!cx) break;
    updates.push_back(process_counterexample(state, ops, oracle, *cx, params.equality_tol));
    if (state.rounds > cap) {
      throw std::runtime_error("learn_exact: exceeded " + std::to_string(cap) + " rounds");
    }
  }
  OomModel model(state.num_obs, horizon, state.bases, ops);
  TestTables tables = test_tables(state);
  return ExactLearnResult{std::move(model), std::move(tables), std::move(state), std::move(updates), n,
                          oracle.query_count() - start};
}

}  // namespace oomlearn
