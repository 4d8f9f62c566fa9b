// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridprompt {

/// Ranked phrase list: most frequent first, ties ordered lexicographically
/// ascending, counts parallel to phrases.
struct Vocabulary {
  std::vector<std::string> phrases;
  std::vector<std::uint64_t> counts;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Candidate phrases of one caption: lowercased tokens split on whitespace
/// and punctuation, stopwords and pure-digit tokens dropped, then unigrams
/// followed by the bigrams of originally adjacent surviving tokens.
std::vector<std::string> extract_candidates(std::string_view caption);

/// Shardable candidate counter. Counting may run on any partition of the
/// corpus; merge is associative and commutative, and top() applies the final
/// deterministic ordering.
class VocabCounter {
 public:
  void add_caption(std::string_view caption);
  void add_candidate(std::string_view candidate, std::uint64_t n = 1);
  void merge(VocabCounter&& other);

  std::uint64_t total_candidates() const noexcept { return total_; }

  /// min(m, distinct) most frequent candidates; throws EmptyCorpus when
  /// nothing was counted.
  Vocabulary top(std::size_t m) const;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocabulary(const std::vector<std::string>& captions, std::size_t m);

// "phrase<TAB>count" per line, rank order.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

bool is_stopword(std::string_view token);

}  // namespace gridprompt
