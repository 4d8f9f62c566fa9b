// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridprompt/record.hpp"

namespace gridprompt {

/// Parses one line of the input corpus into an ImageRecord, enforcing all
/// type invariants. Throws Error with kind Schema / Geometry / Encoding;
/// errors carry base_offset (the line's byte offset within the corpus, plus
/// the within-line position for malformed text) and a dotted field path.
/// Total over arbitrary bytes: any input yields a value or a classified
/// error, never a crash.
ImageRecord parse_record(std::string_view line, std::uint64_t base_offset = 0);

/// Canonical one-line serialization; parse_record(serialize_record(r)) == r
/// for every admissible record.
std::string serialize_record(const ImageRecord& rec);

struct Violation {
  std::string rule;
  std::string field_path;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool admissible() const noexcept { return violations.empty(); }
};

struct ValidationContext {
  int grid_n = 3;
  std::optional<std::string> template_ref;      // unresolved template id, if any
  std::optional<std::size_t> embedding_dim;     // D of the loaded table, if any
};

/// Rule checks over a parsed record. Violations are data, not failures:
/// boxes outside the image bounds (pre-augmentation), embedding count or
/// dimension mismatches, empty caption strings, unknown template reference.
ValidationReport validate_record(const ImageRecord& rec, const ValidationContext& ctx);

}  // namespace gridprompt
