#include "oomlearn/obs_seq.hpp"

#include <sstream>
#include <stdexcept>

namespace oomlearn {

ObsSeq ObsSeq::repeat(Symbol symbol, std::size_t length) {
  return ObsSeq(std::vector<Symbol>(length, symbol));
}

ObsSeq ObsSeq::prefix(std::size_t n) const {
  if (n > size()) throw std::out_of_range("ObsSeq::prefix beyond length");
  return ObsSeq(std::vector<Symbol>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(n)));
}

ObsSeq ObsSeq::suffix_from(std::size_t n) const {
  if (n > size()) throw std::out_of_range("ObsSeq::suffix_from beyond length");
  return ObsSeq(std::vector<Symbol>(symbols_.begin() + static_cast<std::ptrdiff_t>(n), symbols_.end()));
}

ObsSeq ObsSeq::appended(Symbol symbol) const {
  ObsSeq out = *this;
  out.symbols_.push_back(symbol);
  return out;
}

ObsSeq ObsSeq::prepended(Symbol symbol) const {
  std::vector<Symbol> out;
  out.reserve(size() + 1);
  out.push_back(symbol);
  out.insert(out.end(), symbols_.begin(), symbols_.end());
  return ObsSeq(std::move(out));
}

void ObsSeq::validate(int num_obs) const {
  for (Symbol s : symbols_) {
    if (s < 1 || s > num_obs) {
      throw std::invalid_argument("symbol " + std::to_string(s) + " outside 1.." + std::to_string(num_obs));
    }
  }
}

std::string ObsSeq::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(symbols_[i]);
  }
  return out + ")";
}

ObsSeq ObsSeq::parse(const std::string& text) {
  std::string cleaned;
  for (char c : text) cleaned += (c == '(' || c == ')' || c == ',' || c == '[' || c == ']') ? ' ' : c;
  std::istringstream in(cleaned);
  std::vector<Symbol> out;
  Symbol s = 0;
  while (in >> s) out.push_back(s);
  if (!in.eof()) throw std::invalid_argument("cannot parse sequence: " + text);
  return ObsSeq(std::move(out));
}

ObsSeq operator+(const ObsSeq& a, const ObsSeq& b) {
  std::vector<Symbol> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.symbols_.begin(), a.symbols_.end());
  out.insert(out.end(), b.symbols_.begin(), b.symbols_.end());
  return ObsSeq(std::move(out));
}

std::uint64_t count_sequences(int num_obs, std::size_t length) {
  if (num_obs < 1) throw std::invalid_argument("count_sequences: num_obs must be positive");
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (n > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(num_obs)) {
      throw std::overflow_error("count_sequences: too many sequences");
    }
    n *= static_cast<std::uint64_t>(num_obs);
  }
  return n;
}

std::vector<ObsSeq> enumerate_sequences(int num_obs, std::size_t length) {
  const std::uint64_t n = count_sequences(num_obs, length);
  std::vector<ObsSeq> out;
  out.reserve(n);
  std::vector<Symbol> cur(length, 1);
  for (std::uint64_t k = 0; k < n; ++k) {
    out.emplace_back(cur);
    for (std::size_t pos = length; pos-- > 0;) {
      if (cur[pos] < num_obs) {
        ++cur[pos];
        break;
      }
      cur[pos] = 1;
    }
  }
  return out;
}

std::vector<ObsSeq> enumerate_up_to(int num_obs, std::size_t max_length) {
  std::vector<ObsSeq> out;
  for (std::size_t len = 0; len <= max_length; ++len) {
    auto level = enumerate_sequences(num_obs, len);
    out.insert(out.end(), std::make_move_iterator(level.begin()), std::make_move_iterator(level.end()));
  }
  return out;
}

std::size_t lex_index(const ObsSeq& seq, int num_obs) {
  std::size_t idx = 0;
  for (Symbol s : seq) idx = idx * static_cast<std::size_t>(num_obs) + static_cast<std::size_t>(s - 1);
  return idx;
}

std::size_t ObsSeqHash::operator()(const ObsSeq& seq) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL ^ seq.size();
  for (Symbol s : seq) h = (h ^ static_cast<std::size_t>(s)) * 0x100000001b3ULL;
  return h;
}

}  // namespace oomlearn
