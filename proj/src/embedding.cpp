// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/embedding.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "gridprompt/errors.hpp"

namespace gridprompt {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'P', 'E'};
constexpr std::uint16_t kVersion = 1;
// Sanity caps so a corrupt header cannot drive allocations to the moon.
constexpr std::uint32_t kMaxRows = 1u << 28;
constexpr std::uint32_t kMaxDim = 1u << 24;
constexpr std::uint32_t kMaxPhraseBytes = 1u << 20;

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    const std::streamoff pos = in.tellg();
    throw Error(ErrorKind::Truncation,
                std::string("embedding table truncated while reading ") + what,
                pos < 0 ? 0 : static_cast<std::uint64_t>(pos));
  }
}

std::uint16_t read_u16(std::istream& in, const char* what) {
  unsigned char b[2];
  read_exact(in, reinterpret_cast<char*>(b), 2, what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

}  // namespace

EmbeddingMatrix read_embedding_table(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4, "magic");
  if (magic[0] != kMagic[0] || magic[1] != kMagic[1] || magic[2] != kMagic[2] ||
      magic[3] != kMagic[3]) {
    throw Error(ErrorKind::Format, "bad embedding table magic");
  }
  const std::uint16_t version = read_u16(in, "version");
  if (version != kVersion) {
    throw Error(ErrorKind::Format,
                "unsupported embedding table version " + std::to_string(version));
  }
  const std::uint32_t m = read_u32(in, "row count");
  const std::uint32_t d = read_u32(in, "dimension");
  if (m < 1 || d < 1 || m > kMaxRows || d > kMaxDim) {
    throw Error(ErrorKind::Format, "embedding table header out of range (M=" +
                                       std::to_string(m) + ", D=" + std::to_string(d) + ")");
  }

  EmbeddingMatrix table;
  table.dim = d;
  table.phrases.reserve(m);
  std::unordered_set<std::string> seen;
  seen.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const std::uint32_t len = read_u32(in, "phrase length");
    if (len > kMaxPhraseBytes) {
      throw Error(ErrorKind::Format, "phrase length out of range");
    }
    std::string phrase(len, '\0');
    if (len > 0) {
      read_exact(in, phrase.data(), len, "phrase bytes");
    }
    if (!seen.insert(phrase).second) {
      throw Error(ErrorKind::DuplicatePhrase, "duplicate phrase in embedding table: " + phrase);
    }
    table.phrases.push_back(std::move(phrase));
  }

  table.values.resize(static_cast<std::size_t>(m) * d);
  std::vector<unsigned char> buf(static_cast<std::size_t>(d) * 4);
  for (std::uint32_t i = 0; i < m; ++i) {
    read_exact(in, reinterpret_cast<char*>(buf.data()), buf.size(), "vector row");
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::uint32_t bits = static_cast<std::uint32_t>(buf[j * 4]) |
                                 (static_cast<std::uint32_t>(buf[j * 4 + 1]) << 8) |
                                 (static_cast<std::uint32_t>(buf[j * 4 + 2]) << 16) |
                                 (static_cast<std::uint32_t>(buf[j * 4 + 3]) << 24);
      table.values[static_cast<std::size_t>(i) * d + j] = std::bit_cast<float>(bits);
    }
  }
  // Strict framing: exactly one table per file.
  if (in.peek() != std::istream::traits_type::eof()) {
    throw Error(ErrorKind::Format, "trailing bytes after embedding table");
  }
  return table;
}

void write_embedding_table(std::ostream& out, const EmbeddingMatrix& table) {
  if (table.rows() < 1 || table.dim < 1) {
    throw Error(ErrorKind::Format, "refusing to write empty embedding table");
  }
  if (table.values.size() != table.rows() * table.dim) {
    throw Error(ErrorKind::DimensionMismatch, "value buffer does not match M*D");
  }
  out.write(kMagic, 4);
  write_u16(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(table.rows()));
  write_u32(out, static_cast<std::uint32_t>(table.dim));
  for (const std::string& phrase : table.phrases) {
    write_u32(out, static_cast<std::uint32_t>(phrase.size()));
    out.write(phrase.data(), static_cast<std::streamsize>(phrase.size()));
  }
  for (float v : table.values) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    const char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                       static_cast<char>((bits >> 16) & 0xff),
                       static_cast<char>((bits >> 24) & 0xff)};
    out.write(b, 4);
  }
  if (!out) {
    throw Error(ErrorKind::Io, "write failure while emitting embedding table");
  }
}

EmbeddingMatrix load_embedding_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open embedding table: " + path);
  }
  return read_embedding_table(in);
}

void save_embedding_table(const std::string& path, const EmbeddingMatrix& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot create embedding table: " + path);
  }
  write_embedding_table(out, table);
}

}  // namespace gridprompt
