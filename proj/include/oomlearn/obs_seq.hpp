#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace oomlearn {

/// Observation symbol in 1..O.
using Symbol = int;

/// Finite observation sequence; the empty sequence is the empty history/future.
class ObsSeq {
 public:
  ObsSeq() = default;
  ObsSeq(std::initializer_list<Symbol> symbols) : symbols_(symbols) {}
  explicit ObsSeq(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}

  /// `length` copies of `symbol`.
  [[nodiscard]] static ObsSeq repeat(Symbol symbol, std::size_t length);

  [[nodiscard]] std::size_t size() const noexcept { return symbols_.size(); }
  [[nodiscard]] bool empty() const noexcept { return symbols_.empty(); }
  [[nodiscard]] Symbol operator[](std::size_t i) const { return symbols_[i]; }
  [[nodiscard]] Symbol back() const { return symbols_.back(); }
  [[nodiscard]] const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
  [[nodiscard]] auto begin() const noexcept { return symbols_.begin(); }
  [[nodiscard]] auto end() const noexcept { return symbols_.end(); }

  /// First `n` symbols (n ≤ size()).
  [[nodiscard]] ObsSeq prefix(std::size_t n) const;
  /// Symbols from position `n` on.
  [[nodiscard]] ObsSeq suffix_from(std::size_t n) const;
  [[nodiscard]] ObsSeq appended(Symbol symbol) const;
  [[nodiscard]] ObsSeq prepended(Symbol symbol) const;

  void push_back(Symbol symbol) { symbols_.push_back(symbol); }

  /// Throws std::invalid_argument if a symbol lies outside 1..num_obs.
  void validate(int num_obs) const;

  /// "(1,2,1)"; the empty sequence prints as "()".
  [[nodiscard]] std::string to_string() const;
  /// Inverse of to_string; also accepts whitespace separators.
  [[nodiscard]] static ObsSeq parse(const std::string& text);

  friend ObsSeq operator+(const ObsSeq& a, const ObsSeq& b);
  friend bool operator==(const ObsSeq&, const ObsSeq&) = default;
  friend std::strong_ordering operator<=>(const ObsSeq& a, const ObsSeq& b) {
    return a.symbols_ <=> b.symbols_;
  }

 private:
  std::vector<Symbol> symbols_;
};

/// All O^length sequences in lexicographic order (first symbol most significant).
[[nodiscard]] std::vector<ObsSeq> enumerate_sequences(int num_obs, std::size_t length);

/// All sequences of length 0..max_length, ordered by length then lexicographically.
[[nodiscard]] std::vector<ObsSeq> enumerate_up_to(int num_obs, std::size_t max_length);

/// Position of `seq` in enumerate_sequences(num_obs, seq.size()).
[[nodiscard]] std::size_t lex_index(const ObsSeq& seq, int num_obs);

/// num_obs^length, throwing std::overflow_error past 2^62.
[[nodiscard]] std::uint64_t count_sequences(int num_obs, std::size_t length);

struct ObsSeqHash {
  std::size_t operator()(const ObsSeq& seq) const noexcept;
};

}  // namespace oomlearn
