// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridprompt {

enum class ErrorKind {
  Schema,
  Geometry,
  Encoding,
  Format,
  Truncation,
  DuplicatePhrase,
  DimensionMismatch,
  MissingEmbeddings,
  EmptyCandidates,
  EmptyCorpus,
  MissingSlot,
  TooManyTags,
  UnsupportedGrid,
  NoSuchSlot,
  NoAnnotations,
  Validation,
  Config,
  Io,
};

std::string_view error_kind_name(ErrorKind kind);

/// Classified failure carrying enough position information to locate the
/// offending input: the byte offset of the record plus a dotted field path.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::uint64_t byte_offset = 0,
        std::string field_path = {});

  ErrorKind kind() const noexcept { return kind_; }
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  ErrorKind kind_;
  std::uint64_t byte_offset_;
  std::string field_path_;
};

}  // namespace gridprompt
