#include "oomlearn/hmm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace oomlearn {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() < 0.0).any() || !v.allFinite()) throw std::invalid_argument(std::string(what) + ": negative entry");
  if (std::abs(v.sum() - 1.0) > kStochasticTol) throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

Eigen::VectorXd uniform(Eigen::Index n) { return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); }

}  // namespace

Hmm::Hmm(Eigen::VectorXd initial, Eigen::MatrixXd emission, Eigen::MatrixXd transition, std::size_t horizon)
    : initial_(std::move(initial)),
      emission_(std::move(emission)),
      transition_(std::move(transition)),
      horizon_(horizon) {
  const Eigen::Index s = initial_.size();
  if (s < 1) throw std::invalid_argument("Hmm: need at least one state");
  if (emission_.cols() != s || emission_.rows() < 1) throw std::invalid_argument("Hmm: emission must be O x S");
  if (transition_.rows() != s || transition_.cols() != s) throw std::invalid_argument("Hmm: transition must be S x S");
  check_distribution(initial_, "Hmm initial");
  for (Eigen::Index j = 0; j < s; ++j) {
    check_distribution(emission_.col(j), "Hmm emission column");
    check_distribution(transition_.col(j), "Hmm transition column");
  }
}

Hmm Hmm::with_horizon(std::size_t horizon) const { return Hmm(initial_, emission_, transition_, horizon); }

double Hmm::advance(Eigen::VectorXd& belief, Symbol o) const {
  const Eigen::VectorXd weighted = emission_.row(o - 1).transpose().cwiseProduct(belief);
  const double p = weighted.sum();
  if (p > 0.0) {
    belief = transition_ * (weighted / p);
    // Renormalize to keep round-off from drifting over long horizons.
    belief /= belief.sum();
  } else {
    belief = uniform(belief.size());
  }
  return p;
}

FilterResult Hmm::filter(const ObsSeq& history) const {
  check_lengths(history, ObsSeq{});
  FilterResult out{BeliefState{initial_}, 0.0};
  for (Symbol o : history) {
    const double p = advance(out.belief.probs, o);
    out.log_prob += p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

double Hmm::future_prob(const Eigen::VectorXd& belief, const ObsSeq& future) const {
  Eigen::VectorXd b = belief;
  double log_p = 0.0;
  for (Symbol o : future) {
    const double p = advance(b, o);
    if (p <= 0.0) return 0.0;
    log_p += std::log(p);
  }
  return std::exp(log_p);
}

double Hmm::conditional_prob(const ObsSeq& history, const ObsSeq& future) const {
  check_lengths(history, future);
  return future_prob(filter(history).belief.probs, future);
}

double Hmm::joint_prob(const ObsSeq& seq) const {
  if (seq.size() != horizon_) throw std::invalid_argument("joint_prob: sequence length must equal the horizon");
  check_symbols(seq);
  return future_prob(initial_, seq);
}

std::vector<double> Hmm::next_symbol_probs(const ObsSeq& history) const {
  if (history.size() >= horizon_) throw std::invalid_argument("next_symbol_probs: history already at horizon");
  const Eigen::VectorXd p = emission_ * filter(history).belief.probs;
  return {p.data(), p.data() + p.size()};
}

std::vector<double> Hmm::conditional_probs(const ObsSeq& history, std::span<const ObsSeq> futures) const {
  const Eigen::VectorXd belief = filter(history).belief.probs;
  std::vector<double> out;
  out.reserve(futures.size());
  for (const auto& f : futures) {
    check_lengths(history, f);
    out.push_back(future_prob(belief, f));
  }
  return out;
}

ObsSeq Hmm::draw_future(const Eigen::VectorXd& belief, std::size_t length, Rng& rng) const {
  std::vector<Symbol> out;
  out.reserve(length);
  if (length == 0) return ObsSeq{};
  std::size_t state = rng.categorical({belief.data(), static_cast<std::size_t>(belief.size())});
  const auto obs_count = static_cast<std::size_t>(emission_.rows());
  const auto state_count = static_cast<std::size_t>(transition_.rows());
  for (std::size_t k = 0; k < length; ++k) {
    const double* emit = emission_.col(static_cast<Eigen::Index>(state)).data();
    out.push_back(static_cast<Symbol>(rng.categorical({emit, obs_count})) + 1);
    if (k + 1 < length) {
      const double* move = transition_.col(static_cast<Eigen::Index>(state)).data();
      state = rng.categorical({move, state_count});
    }
  }
  return ObsSeq(std::move(out));
}

ObsSeq Hmm::sample_conditional(const ObsSeq& history, Rng& rng) const {
  const auto f = filter(history);
  return draw_future(f.belief.probs, horizon_ - history.size(), rng);
}

std::vector<ObsSeq> Hmm::sample_conditional_batch(const ObsSeq& history, std::size_t count, Rng& rng) const {
  const auto f = filter(history);
  std::vector<ObsSeq> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw_future(f.belief.probs, horizon_ - history.size(), rng));
  return out;
}

void write_hmm(std::ostream& out, const Hmm& hmm) {
  using nlohmann::json;
  json j;
  j["S"] = hmm.num_states();
  j["O"] = hmm.num_obs();
  j["T"] = hmm.horizon();
  j["mu"] = std::vector<double>(hmm.initial().data(), hmm.initial().data() + hmm.initial().size());
  auto rows = [](const Eigen::MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
      arr.push_back(row);
    }
    return arr;
  };
  j["emission"] = rows(hmm.emission());
  j["transition"] = rows(hmm.transition());
  out << j.dump(2) << '\n';
}

Hmm read_hmm(std::istream& in) {
  using nlohmann::json;
  const json j = json::parse(in);
  const auto s = j.at("S").get<Eigen::Index>();
  const auto o = j.at("O").get<Eigen::Index>();
  const auto mu = j.at("mu").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mu.size()) != s) throw std::invalid_argument("read_hmm: mu length differs from S");
  auto matrix = [](const json& arr, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (static_cast<Eigen::Index>(arr.size()) != rows) throw std::invalid_argument(std::string("read_hmm: bad rows in ") + what);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto row = arr.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument(std::string("read_hmm: bad cols in ") + what);
      for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
    }
    return m;
  };
  return Hmm(Eigen::Map<const Eigen::VectorXd>(mu.data(), s), matrix(j.at("emission"), o, s, "emission"),
             matrix(j.at("transition"), s, s, "transition"), j.at("T").get<std::size_t>());
}

void save_hmm(const std::string& path, const Hmm& hmm) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_hmm(out, hmm);
}

Hmm load_hmm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_hmm(in);
}

}  // namespace oomlearn
