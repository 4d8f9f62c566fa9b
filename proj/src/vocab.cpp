// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/vocab.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <unordered_set>
#include <utility>

#include "gridprompt/errors.hpp"

namespace gridprompt {

namespace {

const std::unordered_set<std::string_view>& stopword_set() {
  static const std::unordered_set<std::string_view> set = {
#include "stopwords.inc"
  };
  return set;
}

// Delimiters: ASCII whitespace and punctuation plus the common Unicode
// separator and punctuation ranges. Anything else is a word codepoint.
bool is_delimiter(char32_t cp) {
  if (cp <= 0x7f) {
    const char c = static_cast<char>(cp);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
    if ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
        (c >= '{' && c <= '~')) {
      return true;
    }
    return false;
  }
  switch (cp) {
    case 0x85:    // next line
    case 0xa0:    // no-break space
    case 0xa1:    // inverted exclamation
    case 0xa7:    // section sign
    case 0xab:    // left angle quote
    case 0xb6:    // pilcrow
    case 0xb7:    // middle dot
    case 0xbb:    // right angle quote
    case 0xbf:    // inverted question
    case 0x1680:  // ogham space
    case 0x202f:  // narrow no-break space
    case 0x205f:  // math space
    case 0x3000:  // ideographic space
      return true;
    default:
      break;
  }
  if (cp >= 0x2000 && cp <= 0x200a) return true;  // en quad .. hair space
  if (cp >= 0x2010 && cp <= 0x2027) return true;  // dashes, quotes, ellipsis
  if (cp >= 0x2028 && cp <= 0x2029) return true;  // line/paragraph separator
  if (cp >= 0x2030 && cp <= 0x205e) return true;  // general punctuation
  if (cp >= 0x3001 && cp <= 0x303f) return true;  // CJK punctuation
  if (cp >= 0xff01 && cp <= 0xff0f) return true;  // fullwidth punctuation
  if (cp >= 0xff1a && cp <= 0xff20) return true;
  if (cp >= 0xff3b && cp <= 0xff40) return true;
  if (cp >= 0xff5b && cp <= 0xff65) return true;
  return false;
}

// ASCII plus Latin-1 lowercasing; other scripts pass through unchanged.
char32_t lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp <= 0x7f) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7ff) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp <= 0xffff) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Decodes one codepoint; malformed sequences yield U+FFFD and advance one
// byte, so tokenization is total over arbitrary bytes.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return 0xfffd;
  }
  for (int k = 1; k < len; ++k) {
    const unsigned char b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xc0) != 0x80) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (b & 0x3f);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

bool pure_digits(std::string_view token) {
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return !token.empty();
}

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < caption.size()) {
    const char32_t cp = decode_utf8(caption, i);
    if (is_delimiter(cp) || cp == 0xfffd) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      append_utf8(current, lower(cp));
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

}  // namespace

bool is_stopword(std::string_view token) { return stopword_set().count(token) > 0; }

std::vector<std::string> extract_candidates(std::string_view caption) {
  const std::vector<std::string> tokens = tokenize(caption);
  std::vector<bool> keep(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    keep[i] = !is_stopword(tokens[i]) && !pure_digits(tokens[i]);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (keep[i]) out.push_back(tokens[i]);
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (keep[i] && keep[i + 1]) {
      out.push_back(tokens[i] + " " + tokens[i + 1]);
    }
  }
  return out;
}

void VocabCounter::add_caption(std::string_view caption) {
  for (std::string& candidate : extract_candidates(caption)) {
    ++counts_[std::move(candidate)];
    ++total_;
  }
}

void VocabCounter::add_candidate(std::string_view candidate, std::uint64_t n) {
  counts_[std::string(candidate)] += n;
  total_ += n;
}

void VocabCounter::merge(VocabCounter&& other) {
  if (counts_.size() < other.counts_.size()) {
    std::swap(counts_, other.counts_);
  }
  for (auto& [phrase, n] : other.counts_) {
    counts_[phrase] += n;
  }
  total_ += other.total_;
  other.counts_.clear();
  other.total_ = 0;
}

Vocabulary VocabCounter::top(std::size_t m) const {
  if (counts_.empty()) {
    throw Error(ErrorKind::EmptyCorpus, "no candidate phrases in corpus");
  }
  std::vector<std::pair<std::string_view, std::uint64_t>> ranked;
  ranked.reserve(counts_.size());
  for (const auto& [phrase, n] : counts_) {
    ranked.emplace_back(phrase, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > m) {
    ranked.resize(m);
  }
  Vocabulary vocab;
  vocab.phrases.reserve(ranked.size());
  vocab.counts.reserve(ranked.size());
  for (const auto& [phrase, n] : ranked) {
    vocab.phrases.emplace_back(phrase);
    vocab.counts.push_back(n);
  }
  return vocab;
}

Vocabulary build_vocabulary(const std::vector<std::string>& captions, std::size_t m) {
  if (m < 1) {
    throw Error(ErrorKind::Config, "vocabulary size must be >= 1");
  }
  VocabCounter counter;
  for (const std::string& caption : captions) {
    counter.add_caption(caption);
  }
  return counter.top(m);
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.phrases.size(); ++i) {
    out << vocab.phrases[i] << '\t' << vocab.counts[i] << '\n';
  }
  if (!out) {
    throw Error(ErrorKind::Io, "write failure while emitting vocabulary");
  }
}

Vocabulary read_vocabulary(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw Error(ErrorKind::Format, "vocabulary line " + std::to_string(line_no) +
                                         " is not phrase<TAB>count");
    }
    std::uint64_t count = 0;
    for (std::size_t i = tab + 1; i < line.size(); ++i) {
      if (line[i] < '0' || line[i] > '9') {
        throw Error(ErrorKind::Format,
                    "vocabulary line " + std::to_string(line_no) + " has a non-numeric count");
      }
      count = count * 10 + static_cast<std::uint64_t>(line[i] - '0');
    }
    vocab.phrases.push_back(line.substr(0, tab));
    vocab.counts.push_back(count);
  }
  return vocab;
}

}  // namespace gridprompt
