#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>

#include "oomlearn/hmm.hpp"
#include "oomlearn/oom.hpp"
#include "oomlearn/rng.hpp"

namespace oomlearn {

class RejectionCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Noisy parity over bits z_1..z_T (symbol = bit + 1). The first T−1 bits are
/// uniform; z_T equals the parity of {z_i : i ∈ I} with probability 1−α.
/// State (t, b, z) has index 4(t−1) + 2b + z, where b is the running parity of
/// the bits in I seen before t. States at t = T loop to themselves.
[[nodiscard]] Hmm make_parity_hmm(std::size_t horizon, const std::set<std::size_t>& subset, double alpha);

/// Two parity-class bases: B_t holds one history of each parity of x_{I ∩ [t]}
/// (a single history when that intersection is empty), B_0 = {φ}, B_T = {1^T}.
[[nodiscard]] std::vector<Basis> parity_class_bases(std::size_t horizon, const std::set<std::size_t>& subset);

/// Random HMM whose emission and transition columns are Dirichlet(concentration).
[[nodiscard]] Hmm random_hmm(std::size_t states, int num_obs, std::size_t horizon, Rng& rng,
                             double concentration = 1.0);

/// Rejection-samples Dirichlet(1) columns until σ_min of both the emission and
/// transition matrices is at least sigma_floor; gives up after 10^4 draws.
[[nodiscard]] Hmm make_full_rank_hmm(std::size_t states, int num_obs, std::size_t horizon, std::uint64_t seed,
                                     double sigma_floor);

/// Random HMM with fewer observations than states; no spectral condition enforced.
[[nodiscard]] Hmm make_overcomplete_hmm(std::size_t states, int num_obs, std::size_t horizon, std::uint64_t seed);

}  // namespace oomlearn
