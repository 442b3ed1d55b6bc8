#pragma once

#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "clwe/error.hpp"
#include "clwe/vocabulary.hpp"

namespace clwe {

using WordPair = std::pair<WordId, WordId>;

// Translation pairs between two vocabularies. One source word may have
// several targets. Insertion order is kept; duplicates are dropped.
class DictionaryPairs {
 public:
  DictionaryPairs() = default;
  DictionaryPairs(std::shared_ptr<const Vocabulary> src, std::shared_ptr<const Vocabulary> tgt)
      : src_(std::move(src)), tgt_(std::move(tgt)) {}

  // Returns false when the pair was already present.
  bool add(WordId s, WordId t) {
    if (src_ && s >= src_->size()) throw DataError("dictionary: source id out of range");
    if (tgt_ && t >= tgt_->size()) throw DataError("dictionary: target id out of range");
    if (!seen_.emplace(s, t).second) return false;
    pairs_.emplace_back(s, t);
    return true;
  }

  const std::vector<WordPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  bool contains(WordId s, WordId t) const { return seen_.count({s, t}) > 0; }

  const std::shared_ptr<const Vocabulary>& source_vocab() const { return src_; }
  const std::shared_ptr<const Vocabulary>& target_vocab() const { return tgt_; }

  // Targets grouped per source word, sources in first-appearance order.
  std::vector<std::pair<WordId, std::vector<WordId>>> grouped() const {
    std::vector<std::pair<WordId, std::vector<WordId>>> out;
    std::vector<std::size_t> slot;
    for (const auto& [s, t] : pairs_) {
      if (s >= slot.size()) slot.resize(s + 1, SIZE_MAX);
      if (slot[s] == SIZE_MAX) {
        slot[s] = out.size();
        out.push_back({s, {}});
      }
      out[slot[s]].second.push_back(t);
    }
    return out;
  }

 private:
  std::shared_ptr<const Vocabulary> src_, tgt_;
  std::vector<WordPair> pairs_;
  std::set<WordPair> seen_;
};

}  // namespace clwe
