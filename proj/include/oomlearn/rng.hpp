#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace oomlearn {

/// Seeded pseudo-random stream. Forking is a pure function of (seed, stream, id),
/// so a fork taken twice with the same id replays the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  [[nodiscard]] Rng fork(std::uint64_t id) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on [0, 1).
  double uniform();

  /// Index drawn with probability proportional to weights[i]; weights must be
  /// non-negative with positive sum.
  std::size_t categorical(std::span<const double> weights);

  std::size_t uniform_index(std::size_t n);

  double normal();

  double gamma(double shape);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace oomlearn
