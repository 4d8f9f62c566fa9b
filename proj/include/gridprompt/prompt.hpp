// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridprompt/geometry.hpp"
#include "gridprompt/rng.hpp"
#include "gridprompt/tagging.hpp"

namespace gridprompt {

enum class TemplateId {
  OInBlock,        // "The [O] is in the block [P]."
  BlockLooksLike,  // "The block [P] looks like [O]."
  QaWhichBlock,    // "The [O] is in which block? In [P]."
  OLocatedIn,      // "The [O] is located in block [P]."
  CoordHasO,       // "([X1], [Y1], [W], [H]) has a [O]."
  NounBlockHasO,   // "The block in [NP] has a [O]."
  BlockHasO,       // "The block [P] has a [O]."
  MultiTag,        // "The block [P] has objects [O1], [O2], [O3]."
  MultiPos,        // "The [O] is located in which region? In [P1], [P2] and [P3]."
  RegionSynonym,   // "The object in region [P] looks like [O]."
  Mixed,           // per-sentence uniform draw over the seven base templates
};

std::string_view template_name(TemplateId id);
std::optional<TemplateId> template_from_name(std::string_view name);

inline constexpr std::array<TemplateId, 7> kBaseTemplates = {
    TemplateId::OInBlock,   TemplateId::BlockLooksLike, TemplateId::QaWhichBlock,
    TemplateId::OLocatedIn, TemplateId::CoordHasO,      TemplateId::NounBlockHasO,
    TemplateId::BlockHasO,
};

enum class SlotKind { Position, Object, OutOfBorder, Coord };

std::string_view slot_kind_name(SlotKind kind);  // "P", "O", "X", "COORD"
std::optional<SlotKind> slot_kind_from_name(std::string_view name);

/// Byte-span of one substituted value inside the composed string; the span's
/// substring always equals text.
struct Slot {
  SlotKind kind;
  std::size_t begin = 0;
  std::size_t length = 0;
  std::string text;

  friend bool operator==(const Slot&, const Slot&) = default;
};

enum class PositionStyle { Numeric, Noun };

/// Decimal block index, or the fixed nine-cell noun table for 3x3 grids
/// ("upper left" ... "bottom right" in reading order). An absent block (an
/// object pushed off-canvas) renders as "X".
std::string position_phrase(std::optional<int> block, int grid_n, PositionStyle style);

struct RenderInput {
  std::vector<std::string> positions;
  std::vector<std::string> objects;
  std::optional<Box> coords;
  bool positions_out_of_border = false;  // record position slots as X, not P
};

struct RenderedPrompt {
  std::string text;
  std::vector<Slot> slots;  // offsets relative to text
};

/// Exact surface string for one template; substitution is literal, spot for
/// spot, with no added whitespace and a terminal period.
RenderedPrompt render(TemplateId id, const RenderInput& input);

/// Uniform pick among candidates from the record-scoped stream. A single
/// candidate is returned without consuming a draw.
const std::string& sample_object(const std::vector<std::string>& candidates, RecordRng& rng);

struct PromptPolicy {
  TemplateId template_id = TemplateId::BlockHasO;
  int grid_n = 3;
  std::size_t max_sentences = 0;  // 0 means grid_n^2
  bool emit_x = true;
};

/// One sentence per occupied block, block order ascending, one sampled tag
/// each; then, when emit_x is on, one "X"-position sentence per out-of-border
/// object. Total capped at max_sentences. Under Mixed, each sentence draws
/// its template before its tag.
std::vector<RenderedPrompt> build_prompts(const BlockTagMap& tags, const PromptPolicy& policy,
                                          RecordRng& rng);

struct PromptedSample {
  std::string id;
  std::string caption;   // w
  std::string prompt;    // q
  std::string composed;  // caption + " " + prompt, or the bare caption
  std::vector<Slot> slots;
  TemplateId template_id = TemplateId::BlockHasO;
  std::uint64_t seed_used = 0;

  friend bool operator==(const PromptedSample&, const PromptedSample&) = default;
};

/// Joins caption and sentences; with no sentences the composed string is the
/// caption byte for byte. Slot spans are re-based into the composed string.
PromptedSample compose(const std::string& caption, const std::vector<RenderedPrompt>& sentences);

enum class MaskKind { Position, Object };

std::string_view mask_kind_name(MaskKind kind);  // "P", "O"
std::optional<MaskKind> mask_kind_from_name(std::string_view name);

struct ClozeTarget {
  std::size_t begin = 0;   // span of the mask token inside masked_text
  std::size_t length = 0;
  std::string text;        // ground truth

  friend bool operator==(const ClozeTarget&, const ClozeTarget&) = default;
};

struct ClozeRecord {
  std::string masked_text;
  MaskKind mask_kind = MaskKind::Object;
  std::vector<ClozeTarget> targets;
};

/// Replaces every slot of the requested kind with mask_token. X and COORD
/// slots are never masked. Throws NoSuchSlot when the sample has no slot of
/// the kind.
ClozeRecord make_cloze(const PromptedSample& sample, MaskKind kind, const std::string& mask_token);

/// Substitutes every target back; returns the reconstructed composed string.
std::string substitute_cloze(const ClozeRecord& cloze);

struct PretextWord {
  std::string word;
  bool is_prompt = false;
};

/// Whitespace-split words of the composed string, flagged by region, so a
/// downstream trainer can run its sequence loss over the prompt words.
std::vector<PretextWord> pretext_sequence(const PromptedSample& sample);

// Line formats of the output corpus and the cloze set.
std::string serialize_sample(const PromptedSample& sample);
PromptedSample parse_sample(std::string_view line, std::uint64_t base_offset = 0);
std::string serialize_cloze(const std::string& id, const ClozeRecord& cloze);

}  // namespace gridprompt
