// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/errors.hpp"

namespace gridprompt {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema:
      return "schema";
    case ErrorKind::Geometry:
      return "geometry";
    case ErrorKind::Encoding:
      return "encoding";
    case ErrorKind::Format:
      return "format";
    case ErrorKind::Truncation:
      return "truncation";
    case ErrorKind::DuplicatePhrase:
      return "duplicate_phrase";
    case ErrorKind::DimensionMismatch:
      return "dimension_mismatch";
    case ErrorKind::MissingEmbeddings:
      return "missing_embeddings";
    case ErrorKind::EmptyCandidates:
      return "empty_candidates";
    case ErrorKind::EmptyCorpus:
      return "empty_corpus";
    case ErrorKind::MissingSlot:
      return "missing_slot";
    case ErrorKind::TooManyTags:
      return "too_many_tags";
    case ErrorKind::UnsupportedGrid:
      return "unsupported_grid";
    case ErrorKind::NoSuchSlot:
      return "no_such_slot";
    case ErrorKind::NoAnnotations:
      return "no_annotations";
    case ErrorKind::Validation:
      return "validation";
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Io:
      return "io";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message, std::uint64_t byte_offset,
             std::string field_path)
    : std::runtime_error(message),
      kind_(kind),
      byte_offset_(byte_offset),
      field_path_(std::move(field_path)) {}

}  // namespace gridprompt
