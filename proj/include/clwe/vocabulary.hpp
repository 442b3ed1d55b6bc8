#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clwe/error.hpp"

namespace clwe {

using WordId = std::uint32_t;

inline bool has_whitespace(std::string_view s) {
  for (char c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  return false;
}

// Bijection between tokens and dense ids 0..n-1, most frequent first.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Throws DataError on duplicates, whitespace in tokens, or counts that
  // increase with id.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
      : tokens_(std::move(tokens)), counts_(std::move(counts)) {
    if (tokens_.size() != counts_.size())
      throw DataError("vocabulary: token and count lists differ in length");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty() || has_whitespace(tokens_[i]))
        throw DataError("vocabulary: invalid token '" + tokens_[i] + "'");
      if (i > 0 && counts_[i] > counts_[i - 1])
        throw DataError("vocabulary: counts must be non-increasing (token '" + tokens_[i] + "')");
      if (!index_.emplace(tokens_[i], static_cast<WordId>(i)).second)
        throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }

  // Counts synthesized from rank (n - rank), as for pretrained files.
  static Vocabulary from_ranked(std::vector<std::string> tokens) {
    std::vector<std::uint64_t> counts(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) counts[i] = tokens.size() - i;
    return Vocabulary(std::move(tokens), std::move(counts));
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::string& token(WordId id) const { return tokens_.at(id); }
  std::uint64_t count(WordId id) const { return counts_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::optional<WordId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view token) const { return find(token).has_value(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
};

}  // namespace clwe
