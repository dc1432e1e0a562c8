#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "oomlearn/distribution.hpp"
#include "oomlearn/rng.hpp"

namespace oomlearn {

enum class OracleMode {
  ExactProbability,     ///< answers Pr[f | h]
  ConditionalSampling,  ///< answers a draw from Pr[· | h]
};

class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WrongOracleMode : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct OracleStats {
  std::uint64_t total = 0;
  std::vector<std::uint64_t> by_history_length;  ///< index = |h|; joint samples count at 0
  std::uint64_t joint_samples = 0;
};

/// Query-counting access to a distribution. Every call that returns an answer costs
/// exactly one query per answer; a call that would exceed the budget throws
/// BudgetExhausted without consuming anything.
///
/// Overloads without an Rng argument draw from the handle's own stream, which
/// advances; callers needing reproducible or concurrent draws pass a stream from
/// fork_stream. Counters are atomic.
class OracleHandle {
 public:
  OracleHandle(std::shared_ptr<const SequenceDistribution> dist, OracleMode mode, std::uint64_t seed,
               std::optional<std::uint64_t> budget = std::nullopt);

  OracleHandle(const OracleHandle&) = delete;
  OracleHandle& operator=(const OracleHandle&) = delete;

  [[nodiscard]] OracleMode mode() const noexcept { return mode_; }
  [[nodiscard]] int num_obs() const { return dist_->num_obs(); }
  [[nodiscard]] std::size_t horizon() const { return dist_->horizon(); }
  [[nodiscard]] std::optional<std::uint64_t> budget() const noexcept { return budget_; }

  /// Pr[f | h]; exact mode only.
  double exact_query(const ObsSeq& h, const ObsSeq& f);

  /// One draw of a full-length future given h; sampling mode only.
  ObsSeq sample_query(const ObsSeq& h);
  ObsSeq sample_query(const ObsSeq& h, Rng& stream);
  /// `count` draws given h, costing `count` queries.
  std::vector<ObsSeq> sample_queries(const ObsSeq& h, std::size_t count, Rng& stream);

  /// Length-t prefix of a joint draw; one query in either mode.
  ObsSeq sample_joint(std::size_t t);
  ObsSeq sample_joint(std::size_t t, Rng& stream);

  [[nodiscard]] std::uint64_t query_count() const noexcept { return total_.load(); }
  [[nodiscard]] OracleStats stats() const;

  [[nodiscard]] Rng fork_stream(std::uint64_t id) const { return rng_.fork(id); }

 private:
  void charge(std::size_t history_length, std::uint64_t count);
  void require(OracleMode mode, const char* op) const;

  std::shared_ptr<const SequenceDistribution> dist_;
  OracleMode mode_;
  std::optional<std::uint64_t> budget_;
  Rng rng_;
  std::atomic<std::uint64_t> total_{0};
  std::atomic<std::uint64_t> joint_{0};
  std::vector<std::atomic<std::uint64_t>> by_length_;
};

}  // namespace oomlearn
