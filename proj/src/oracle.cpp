#include "oomlearn/oracle.hpp"

#include <string>

namespace oomlearn {

OracleHandle::OracleHandle(std::shared_ptr<const SequenceDistribution> dist, OracleMode mode, std::uint64_t seed,
                           std::optional<std::uint64_t> budget)
    : dist_(std::move(dist)), mode_(mode), budget_(budget), rng_(seed), by_length_(dist_->horizon() + 1) {
  if (!dist_) throw std::invalid_argument("OracleHandle: null distribution");
}

void OracleHandle::require(OracleMode mode, const char* op) const {
  if (mode_ != mode) throw WrongOracleMode(std::string(op) + ": oracle is in the other mode");
}

void OracleHandle::charge(std::size_t history_length, std::uint64_t count) {
  std::uint64_t cur = total_.load();
  do {
    if (budget_ && cur + count > *budget_) {
      throw BudgetExhausted("oracle budget of " + std::to_string(*budget_) + " queries exhausted");
    }
  } while (!total_.compare_exchange_weak(cur, cur + count));
  by_length_[history_length].fetch_add(count);
}

double OracleHandle::exact_query(const ObsSeq& h, const ObsSeq& f) {
  require(OracleMode::ExactProbability, "exact_query");
  if (h.size() + f.size() > dist_->horizon()) throw std::invalid_argument("exact_query: |h|+|f| exceeds horizon");
  h.validate(dist_->num_obs());
  f.validate(dist_->num_obs());
  charge(h.size(), 1);
  return dist_->conditional_prob(h, f);
}

ObsSeq OracleHandle::sample_query(const ObsSeq& h) { return sample_query(h, rng_); }

ObsSeq OracleHandle::sample_query(const ObsSeq& h, Rng& stream) {
  require(OracleMode::ConditionalSampling, "sample_query");
  if (h.size() > dist_->horizon()) throw std::invalid_argument("sample_query: history exceeds horizon");
  h.validate(dist_->num_obs());
  charge(h.size(), 1);
  return dist_->sample_conditional(h, stream);
}

std::vector<ObsSeq> OracleHandle::sample_queries(const ObsSeq& h, std::size_t count, Rng& stream) {
  require(OracleMode::ConditionalSampling, "sample_queries");
  if (h.size() > dist_->horizon()) throw std::invalid_argument("sample_queries: history exceeds horizon");
  h.validate(dist_->num_obs());
  charge(h.size(), count);
  return dist_->sample_conditional_batch(h, count, stream);
}

ObsSeq OracleHandle::sample_joint(std::size_t t) { return sample_joint(t, rng_); }

ObsSeq OracleHandle::sample_joint(std::size_t t, Rng& stream) {
  if (t > dist_->horizon()) throw std::invalid_argument("sample_joint: length exceeds horizon");
  charge(0, 1);
  joint_.fetch_add(1);
  return dist_->sample_conditional(ObsSeq{}, stream).prefix(t);
}

OracleStats OracleHandle::stats() const {
  OracleStats s;
  s.total = total_.load();
  s.joint_samples = joint_.load();
  for (const auto& c : by_length_) s.by_history_length.push_back(c.load());
  return s;
}

}  // namespace oomlearn
