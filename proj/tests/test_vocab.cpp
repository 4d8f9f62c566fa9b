// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "gridprompt/errors.hpp"
#include "gridprompt/rng.hpp"
#include "gridprompt/vocab.hpp"

using namespace gridprompt;

TEST_CASE("candidate extraction follows the stated rules") {
  CHECK(extract_candidates("A dog on the grass") == std::vector<std::string>{"dog", "grass"});
  CHECK(extract_candidates("red panda") ==
        std::vector<std::string>{"red", "panda", "red panda"});
  CHECK(extract_candidates("The 12 dogs") == std::vector<std::string>{"dogs"});
  CHECK(extract_candidates("") == std::vector<std::string>{});
  CHECK(extract_candidates("  ,,  !!") == std::vector<std::string>{});
  // punctuation breaks adjacency for bigrams? no: adjacency is positional in
  // the token sequence, and punctuation only separates tokens
  CHECK(extract_candidates("red, panda") ==
        std::vector<std::string>{"red", "panda", "red panda"});
  // curly quotes and dashes are delimiters too
  CHECK(extract_candidates("dog\xe2\x80\x94house") ==
        std::vector<std::string>{"dog", "house", "dog house"});
}

TEST_CASE("extraction is idempotent on its own unigrams") {
  SplitMix64 rng(11);
  const std::vector<std::string> captions = {"Red Panda climbing", "a small BLUE boat",
                                             "Cars; cars, CARS!"};
  for (const std::string& caption : captions) {
    for (const std::string& candidate : extract_candidates(caption)) {
      if (candidate.find(' ') != std::string::npos) continue;  // bigram
      CHECK(extract_candidates(candidate) == std::vector<std::string>{candidate});
    }
  }
}

namespace {

// Second implementation of the extraction rules for ASCII captions: lowercase,
// split on non-alphanumeric bytes, drop stopwords and digit runs, unigrams
// then originally-adjacent bigrams.
std::vector<std::string> oracle_candidates_ascii(const std::string& caption) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char raw : caption) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);

  std::vector<bool> keep(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool digits = std::all_of(tokens[i].begin(), tokens[i].end(),
                                    [](char c) { return c >= '0' && c <= '9'; });
    keep[i] = !is_stopword(tokens[i]) && !digits;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (keep[i]) out.push_back(tokens[i]);
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (keep[i] && keep[i + 1]) out.push_back(tokens[i] + " " + tokens[i + 1]);
  }
  return out;
}

std::string random_ascii_caption(SplitMix64& rng) {
  static const char* words[] = {"dog", "cat",  "the", "a",    "on", "grass", "red",
                                "42",  "blue", "sky", "bench", "of", "and",  "tree"};
  static const char* seps[] = {" ", ", ", "; ", " - ", "  ", "! ", "? "};
  std::string caption;
  const int len = 1 + static_cast<int>(rng.next() % 8);
  for (int i = 0; i < len; ++i) {
    if (i != 0) caption += seps[rng.next() % 7];
    std::string w = words[rng.next() % 14];
    if (rng.next() % 3 == 0) {
      for (char& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    caption += w;
  }
  return caption;
}

}  // namespace

TEST_CASE("extraction matches an independent rule implementation") {
  SplitMix64 rng(7777);
  for (int i = 0; i < 200; ++i) {
    const std::string caption = random_ascii_caption(rng);
    CHECK(extract_candidates(caption) == oracle_candidates_ascii(caption));
  }
}

TEST_CASE("vocabulary counting basics") {
  const Vocabulary v = build_vocabulary({"dog dog cat"}, 3000);
  REQUIRE(v.phrases.size() >= 2);
  CHECK(v.phrases[0] == "dog");
  CHECK(v.counts[0] == 2);
  // "cat" and the bigram "dog cat"/"dog dog" follow with count 1, ties in
  // lexicographic order
  CHECK(std::is_sorted(v.counts.begin(), v.counts.end(), std::greater<>()));

  const Vocabulary top1 = build_vocabulary({"dog cat", "cat"}, 1);
  REQUIRE(top1.phrases.size() == 1);
  CHECK(top1.phrases[0] == "cat");
  CHECK(top1.counts[0] == 2);

  CHECK_THROWS_AS(build_vocabulary({"the of and"}, 10), Error);  // nothing survives
}

TEST_CASE("tie order is lexicographic ascending and counts never increase") {
  const Vocabulary v = build_vocabulary({"zebra apple", "apple zebra"}, 100);
  // apple=2, zebra=2, bigrams 1 each
  REQUIRE(v.phrases.size() == 4);
  CHECK(v.phrases[0] == "apple");
  CHECK(v.phrases[1] == "zebra");
  CHECK(v.phrases[2] == "apple zebra");
  CHECK(v.phrases[3] == "zebra apple");
  for (std::size_t i = 1; i < v.counts.size(); ++i) {
    CHECK(v.counts[i - 1] >= v.counts[i]);
    if (v.counts[i - 1] == v.counts[i]) {
      CHECK(v.phrases[i - 1] < v.phrases[i]);
    }
  }
}

TEST_CASE("counting is invariant to corpus order and sharding") {
  SplitMix64 rng(4096);
  std::vector<std::string> corpus;
  for (int i = 0; i < 3000; ++i) {
    corpus.push_back(random_ascii_caption(rng));
  }
  const Vocabulary base = build_vocabulary(corpus, 500);

  std::vector<std::string> shuffled = corpus;
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.next() % i]);
  }
  CHECK(build_vocabulary(shuffled, 500) == base);

  // sharded counting with commutative merges
  VocabCounter a;
  VocabCounter b;
  VocabCounter c;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add_caption(corpus[i]);
  }
  VocabCounter merged;
  merged.merge(std::move(c));
  merged.merge(std::move(a));
  merged.merge(std::move(b));
  CHECK(merged.top(500) == base);
}

TEST_CASE("vocabulary export/import round-trip") {
  const Vocabulary v = build_vocabulary({"red panda", "red fox", "red dog"}, 100);
  std::stringstream buf;
  write_vocabulary(buf, v);
  CHECK(read_vocabulary(buf) == v);

  std::stringstream bad("no-tab-here\n");
  CHECK_THROWS_AS(read_vocabulary(bad), Error);
}

TEST_CASE("every kept count dominates every dropped candidate") {
  SplitMix64 rng(31);
  std::vector<std::string> corpus;
  for (int i = 0; i < 2000; ++i) corpus.push_back(random_ascii_caption(rng));
  const Vocabulary all = build_vocabulary(corpus, 100000);
  const std::size_t m = 25;
  const Vocabulary top = build_vocabulary(corpus, m);
  REQUIRE(top.phrases.size() == std::min(m, all.phrases.size()));
  if (all.phrases.size() > m) {
    const std::uint64_t floor = top.counts.back();
    for (std::size_t i = m; i < all.counts.size(); ++i) {
      CHECK(all.counts[i] <= floor);
    }
  }
}
