// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gridprompt {

/// Phrase vocabulary paired with one D-dimensional float row per phrase.
/// Rows are stored row-major and read/written bit-exactly.
struct EmbeddingMatrix {
  std::vector<std::string> phrases;
  std::vector<float> values;  // phrases.size() * dim, row-major
  std::size_t dim = 0;

  std::size_t rows() const noexcept { return phrases.size(); }

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

// Binary sidecar layout, all integers little-endian:
//   "PTPE" magic, u16 version (currently 1), u32 row count M, u32 dim D,
//   M phrases (u32 byte length + UTF-8 bytes),
//   M*D IEEE-754 binary32 values, row-major.
EmbeddingMatrix read_embedding_table(std::istream& in);
void write_embedding_table(std::ostream& out, const EmbeddingMatrix& table);

EmbeddingMatrix load_embedding_table(const std::string& path);
void save_embedding_table(const std::string& path, const EmbeddingMatrix& table);

}  // namespace gridprompt
