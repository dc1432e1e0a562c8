#include "oomlearn/oom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oomlearn/linalg.hpp"

namespace oomlearn {

void Basis::validate() const {
  for (const auto& m : members) {
    if (m.size() != t) throw std::invalid_argument("Basis: member " + m.to_string() + " has length != " + std::to_string(t));
  }
}

Basis initial_basis() { return Basis{0, {ObsSeq{}}}; }

Basis terminal_basis(std::size_t horizon) { return Basis{horizon, {ObsSeq::repeat(1, horizon)}}; }

OomModel::OomModel(int num_obs, std::size_t horizon, std::vector<Basis> bases,
                   std::vector<std::vector<Eigen::MatrixXd>> operators)
    : num_obs_(num_obs), horizon_(horizon), bases_(std::move(bases)), operators_(std::move(operators)) {
  if (num_obs_ < 1) throw std::invalid_argument("OomModel: need at least one symbol");
  if (bases_.size() != horizon_ + 1) throw std::invalid_argument("OomModel: need T+1 bases");
  if (operators_.size() != horizon_) throw std::invalid_argument("OomModel: need T operator groups");
  for (std::size_t t = 0; t <= horizon_; ++t) {
    if (bases_[t].t != t) throw std::invalid_argument("OomModel: basis timestep mismatch at t=" + std::to_string(t));
    if (bases_[t].size() == 0) throw std::invalid_argument("OomModel: empty basis at t=" + std::to_string(t));
    bases_[t].validate();
    for (const auto& m : bases_[t].members) m.validate(num_obs_);
  }
  if (bases_.front().size() != 1 || bases_.back().size() != 1) {
    throw std::invalid_argument("OomModel: B_0 and B_T must be singletons");
  }
  for (std::size_t t = 0; t < horizon_; ++t) {
    if (operators_[t].size() != static_cast<std::size_t>(num_obs_)) {
      throw std::invalid_argument("OomModel: need O operators at t=" + std::to_string(t));
    }
    for (const auto& a : operators_[t]) {
      if (a.rows() != static_cast<Eigen::Index>(bases_[t + 1].size()) ||
          a.cols() != static_cast<Eigen::Index>(bases_[t].size())) {
        throw std::invalid_argument("OomModel: operator shape mismatch at t=" + std::to_string(t));
      }
      if (!a.allFinite()) throw std::invalid_argument("OomModel: non-finite operator entry");
    }
  }
}

const Eigen::MatrixXd& OomModel::op(std::size_t t, Symbol o) const {
  if (t >= horizon_ || o < 1 || o > num_obs_) throw std::out_of_range("OomModel::op index");
  return operators_[t][static_cast<std::size_t>(o - 1)];
}

Eigen::VectorXd eval_state(const OomModel& model, const ObsSeq& prefix) {
  if (prefix.size() > model.horizon()) throw std::invalid_argument("eval_state: prefix longer than horizon");
  prefix.validate(model.num_obs());
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (std::size_t t = 0; t < prefix.size(); ++t) w = model.op(t, prefix[t]) * w;
  return w;
}

double eval_prob(const OomModel& model, const ObsSeq& seq) {
  if (seq.size() != model.horizon()) throw std::invalid_argument("eval_prob: sequence length must equal the horizon");
  return eval_state(model, seq)(0);
}

Eigen::VectorXd eval_prefix_tests(const OomModel& model, const ObsSeq& prefix, const Eigen::MatrixXd& test_values) {
  const Eigen::VectorXd w = eval_state(model, prefix);
  if (test_values.cols() != w.size()) throw std::invalid_argument("eval_prefix_tests: test table width mismatch");
  return test_values * w;
}

Coefficients exact_coefficients(const SequenceDistribution& dist, const Basis& basis, const ObsSeq& history,
                                double rel_cutoff) {
  if (history.size() != basis.t) throw std::invalid_argument("exact_coefficients: history length differs from basis");
  const auto futures = futures_at(dist.num_obs(), dist.horizon(), basis.t, FutureScheme::ExactLength);
  const Eigen::MatrixXd p = cond_block(dist, basis.members, futures);
  const auto col = dist.conditional_probs(history, futures);
  return min_norm_solve(p, Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(col.size())),
                        rel_cutoff);
}

OomModel construct_exact_operators(const SequenceDistribution& dist, std::vector<Basis> bases, double residual_tol,
                                   const EnumerationCap& cap) {
  const std::size_t horizon = dist.horizon();
  const int num_obs = dist.num_obs();
  cap.check(num_obs, horizon);
  if (bases.size() != horizon + 1) throw std::invalid_argument("construct_exact_operators: need T+1 bases");

  std::vector<Eigen::MatrixXd> tables(horizon + 1);
  std::vector<Eigen::MatrixXd> inverses(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) {
    const auto futures = futures_at(num_obs, horizon, t, FutureScheme::ExactLength);
    tables[t] = cond_block(dist, bases[t].members, futures);
    inverses[t] = pseudo_inverse(tables[t]);
  }

  std::vector<std::vector<Eigen::MatrixXd>> ops(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto block = static_cast<Eigen::Index>(count_sequences(num_obs, horizon - t - 1));
    const auto futures_next = futures_at(num_obs, horizon, t + 1, FutureScheme::ExactLength);
    const auto n = static_cast<Eigen::Index>(bases[t].size());
    for (Symbol o = 1; o <= num_obs; ++o) {
      // Rows of Pr[F_t | B_t] whose future starts with o, in F_{t+1} order.
      const Eigen::MatrixXd shifted = tables[t].middleRows(block * (o - 1), block);
      Eigen::MatrixXd a(static_cast<Eigen::Index>(bases[t + 1].size()), n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p_o = shifted.col(i).sum();
        if (p_o <= 0.0) {
          a.col(i).setZero();
          continue;
        }
        const ObsSeq extended = bases[t].members[static_cast<std::size_t>(i)].appended(o);
        const auto col = dist.conditional_probs(extended, futures_next);
        const Eigen::Map<const Eigen::VectorXd> target(col.data(), static_cast<Eigen::Index>(col.size()));
        a.col(i) = p_o * (inverses[t + 1] * target);
      }
      const double residual = (tables[t + 1] * a - shifted).cwiseAbs().maxCoeff();
      if (residual > residual_tol) {
        throw std::domain_error("construct_exact_operators: bases do not span at t=" + std::to_string(t + 1) +
                                " (residual " + std::to_string(residual) + ")");
      }
      ops[t].push_back(std::move(a));
    }
  }
  return OomModel(num_obs, horizon, std::move(bases), std::move(ops));
}

std::vector<Basis> greedy_bases(const SequenceDistribution& dist, double rel_tol, const EnumerationCap& cap) {
  const std::size_t horizon = dist.horizon();
  cap.check(dist.num_obs(), horizon);
  std::vector<Basis> out;
  out.push_back(initial_basis());
  for (std::size_t t = 1; t < horizon; ++t) {
    const auto m = cond_matrix(dist, t, FutureScheme::ExactLength, cap);
    const int target = numerical_rank(m.values, rel_tol);
    Basis b{t, {}};
    Eigen::MatrixXd kept(m.values.rows(), 0);
    int rank = 0;
    for (std::size_t j = 0; j < m.histories.size() && rank < target; ++j) {
      Eigen::MatrixXd trial(kept.rows(), kept.cols() + 1);
      trial << kept, m.values.col(static_cast<Eigen::Index>(j));
      const int r = numerical_rank(trial, rel_tol);
      if (r > rank) {
        kept = std::move(trial);
        rank = r;
        b.members.push_back(m.histories[j]);
      }
    }
    out.push_back(std::move(b));
  }
  if (horizon > 0) out.push_back(terminal_basis(horizon));
  return out;
}

Coefficients evolve_coefficients(const OomModel& model, std::size_t t, const Coefficients& beta, Symbol o,
                                 double prob_o) {
  if (!(prob_o > 0.0)) throw std::domain_error("evolve_coefficients: Pr[o|h] must be positive");
  const auto& a = model.op(t, o);
  if (a.cols() != beta.size()) throw std::invalid_argument("evolve_coefficients: coefficient length mismatch");
  return a * beta / prob_o;
}

NormalizedModel::NormalizedModel(OomModel model, std::optional<TestTables> tests)
    : model_(std::move(model)), tests_(std::move(tests)) {
  const std::size_t horizon = model_.horizon();
  if (tests_) {
    if (tests_->values.size() != horizon + 1 || tests_->anchor_row.size() != horizon + 1) {
      throw std::invalid_argument("NormalizedModel: test tables need T+1 entries");
    }
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto& anchor = tests_->tests.at(t).at(tests_->anchor_row[t]);
      if (anchor.size() != 1) throw std::invalid_argument("NormalizedModel: anchor test must be one symbol");
      if (tests_->values[t].cols() != static_cast<Eigen::Index>(model_.basis(t).size())) {
        throw std::invalid_argument("NormalizedModel: test table width mismatch");
      }
    }
  }
  marginalizers_.resize(horizon + 1);
  marginalizers_[horizon] = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(model_.basis(horizon).size()));
  for (std::size_t t = horizon; t-- > 0;) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(model_.basis(t).size()));
    for (Symbol o = 1; o <= model_.num_obs(); ++o) e += marginalizers_[t + 1] * model_.op(t, o);
    marginalizers_[t] = std::move(e);
  }
}

NormalizedModel::Cursor NormalizedModel::start() const { return Cursor{0, Eigen::VectorXd::Ones(1), 1.0}; }

std::vector<double> NormalizedModel::conditionals(const Cursor& c) const {
  const auto num = static_cast<std::size_t>(model_.num_obs());
  std::vector<double> p(num, 0.0);
  if (!(c.marginal > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(num));
    return p;
  }
  if (tests_ && num == 2) {
    const std::size_t row = tests_->anchor_row[c.t];
    const Symbol z = tests_->tests[c.t][row][0];
    const double raw = tests_->values[c.t].row(static_cast<Eigen::Index>(row)).dot(c.state);
    const double pz = std::clamp(raw / c.marginal, 0.0, 1.0);
    p[static_cast<std::size_t>(z - 1)] = pz;
    p[static_cast<std::size_t>(2 - z)] = 1.0 - pz;
    return p;
  }
  double total = 0.0;
  for (Symbol o = 1; o <= model_.num_obs(); ++o) {
    const double raw = marginalizers_[c.t + 1].dot(model_.op(c.t, o) * c.state);
    const double v = std::clamp(raw / c.marginal, 0.0, 1.0);
    p[static_cast<std::size_t>(o - 1)] = v;
    total += v;
  }
  if (total > 0.0) {
    for (double& v : p) v /= total;
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(num));
  }
  return p;
}

void NormalizedModel::step(Cursor& c, Symbol o, double prob_o) const {
  c.state = model_.op(c.t, o) * c.state;
  c.marginal *= prob_o;
  ++c.t;
}

NormalizedModel::Cursor NormalizedModel::walk(const ObsSeq& history) const {
  Cursor c = start();
  for (Symbol o : history) {
    const auto p = conditionals(c);
    step(c, o, p[static_cast<std::size_t>(o - 1)]);
  }
  return c;
}

double NormalizedModel::conditional_prob(const ObsSeq& history, const ObsSeq& future) const {
  check_lengths(history, future);
  Cursor c = walk(history);
  double prob = 1.0;
  for (Symbol o : future) {
    const double p = conditionals(c)[static_cast<std::size_t>(o - 1)];
    prob *= p;
    if (prob == 0.0) return 0.0;
    step(c, o, p);
  }
  return prob;
}

double NormalizedModel::joint_prob(const ObsSeq& seq) const {
  if (seq.size() != horizon()) throw std::invalid_argument("joint_prob: sequence length must equal the horizon");
  return conditional_prob(ObsSeq{}, seq);
}

std::vector<double> NormalizedModel::next_symbol_probs(const ObsSeq& history) const {
  if (history.size() >= horizon()) throw std::invalid_argument("next_symbol_probs: history already at horizon");
  check_symbols(history);
  return conditionals(walk(history));
}

ObsSeq NormalizedModel::sample_conditional(const ObsSeq& history, Rng& rng) const {
  check_lengths(history, ObsSeq{});
  Cursor c = walk(history);
  std::vector<Symbol> out;
  while (c.t < horizon()) {
    const auto p = conditionals(c);
    const auto o = static_cast<Symbol>(rng.categorical(p)) + 1;
    out.push_back(o);
    step(c, o, p[static_cast<std::size_t>(o - 1)]);
  }
  return ObsSeq(std::move(out));
}

NormalizedModel to_distribution(OomModel model, std::optional<TestTables> tests) {
  return NormalizedModel(std::move(model), std::move(tests));
}

}  // namespace oomlearn
