// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "gridprompt/errors.hpp"
#include "json_util.hpp"

namespace gridprompt {

namespace {

struct TemplateNames {
  TemplateId id;
  std::string_view name;
};

constexpr TemplateNames kTemplateNames[] = {
    {TemplateId::OInBlock, "o_in_block"},
    {TemplateId::BlockLooksLike, "block_looks_like"},
    {TemplateId::QaWhichBlock, "qa_which_block"},
    {TemplateId::OLocatedIn, "o_located_in"},
    {TemplateId::CoordHasO, "coord_has_o"},
    {TemplateId::NounBlockHasO, "noun_block_has_o"},
    {TemplateId::BlockHasO, "block_has_o"},
    {TemplateId::MultiTag, "multi_tag"},
    {TemplateId::MultiPos, "multi_pos"},
    {TemplateId::RegionSynonym, "region_synonym"},
    {TemplateId::Mixed, "mixed"},
};

constexpr std::string_view kNounTable[9] = {
    "upper left",  "upper middle", "upper right",  "middle left",   "center",
    "middle right", "bottom left", "bottom middle", "bottom right",
};

// Accumulates literal text and slot substitutions with exact byte spans.
struct SentenceBuilder {
  std::string text;
  std::vector<Slot> slots;

  void lit(std::string_view s) { text += s; }

  void slot(SlotKind kind, std::string_view value) {
    slots.push_back({kind, text.size(), value.size(), std::string(value)});
    text += value;
  }
};

std::string format_coord(double v) {
  // round half to even, rendered as a plain integer
  const long long r = static_cast<long long>(std::nearbyint(v));
  return std::to_string(r);
}

std::string coord_tuple(const Box& box) {
  return "(" + format_coord(box.x) + ", " + format_coord(box.y) + ", " + format_coord(box.w) +
         ", " + format_coord(box.h) + ")";
}

void want_positions(const RenderInput& in, std::size_t lo, std::size_t hi, TemplateId id) {
  if (in.positions.size() < lo) {
    throw Error(ErrorKind::MissingSlot,
                std::string("template ") + std::string(template_name(id)) +
                    " needs a position value");
  }
  if (in.positions.size() > hi) {
    throw Error(ErrorKind::TooManyTags,
                std::string("template ") + std::string(template_name(id)) + " takes at most " +
                    std::to_string(hi) + " position value(s)");
  }
}

void want_objects(const RenderInput& in, std::size_t lo, std::size_t hi, TemplateId id) {
  if (in.objects.size() < lo) {
    throw Error(ErrorKind::MissingSlot, std::string("template ") +
                                            std::string(template_name(id)) +
                                            " needs an object value");
  }
  if (in.objects.size() > hi) {
    throw Error(ErrorKind::TooManyTags,
                std::string("template ") + std::string(template_name(id)) + " takes at most " +
                    std::to_string(hi) + " object value(s)");
  }
}

}  // namespace

std::string_view template_name(TemplateId id) {
  for (const TemplateNames& t : kTemplateNames) {
    if (t.id == id) return t.name;
  }
  return "block_has_o";
}

std::optional<TemplateId> template_from_name(std::string_view name) {
  for (const TemplateNames& t : kTemplateNames) {
    if (t.name == name) return t.id;
  }
  return std::nullopt;
}

std::string_view slot_kind_name(SlotKind kind) {
  switch (kind) {
    case SlotKind::Position:
      return "P";
    case SlotKind::Object:
      return "O";
    case SlotKind::OutOfBorder:
      return "X";
    case SlotKind::Coord:
      return "COORD";
  }
  return "O";
}

std::optional<SlotKind> slot_kind_from_name(std::string_view name) {
  if (name == "P") return SlotKind::Position;
  if (name == "O") return SlotKind::Object;
  if (name == "X") return SlotKind::OutOfBorder;
  if (name == "COORD") return SlotKind::Coord;
  return std::nullopt;
}

std::string position_phrase(std::optional<int> block, int grid_n, PositionStyle style) {
  if (!block.has_value()) {
    return "X";
  }
  if (*block < 0 || *block >= grid_n * grid_n) {
    throw Error(ErrorKind::Config, "block index " + std::to_string(*block) +
                                       " out of range for a " + std::to_string(grid_n) + "x" +
                                       std::to_string(grid_n) + " grid");
  }
  if (style == PositionStyle::Noun) {
    if (grid_n != 3) {
      throw Error(ErrorKind::UnsupportedGrid,
                  "noun position phrases are defined for 3x3 grids only");
    }
    return std::string(kNounTable[*block]);
  }
  return std::to_string(*block);
}

RenderedPrompt render(TemplateId id, const RenderInput& in) {
  const SlotKind pos_kind = in.positions_out_of_border ? SlotKind::OutOfBorder : SlotKind::Position;
  SentenceBuilder b;
  switch (id) {
    case TemplateId::OInBlock:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(" is in the block ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(".");
      break;
    case TemplateId::BlockLooksLike:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The block ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(" looks like ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(".");
      break;
    case TemplateId::QaWhichBlock:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(" is in which block? In ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(".");
      break;
    case TemplateId::OLocatedIn:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(" is located in block ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(".");
      break;
    case TemplateId::CoordHasO:
      want_objects(in, 1, 1, id);
      if (!in.coords.has_value()) {
        throw Error(ErrorKind::MissingSlot, "template coord_has_o needs box coordinates");
      }
      b.slot(SlotKind::Coord, coord_tuple(*in.coords));
      b.lit(" has a ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(".");
      break;
    case TemplateId::NounBlockHasO:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The block in ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(" has a ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(".");
      break;
    case TemplateId::BlockHasO:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The block ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(" has a ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(".");
      break;
    case TemplateId::MultiTag:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 3, id);
      b.lit("The block ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(" has objects ");
      for (std::size_t i = 0; i < in.objects.size(); ++i) {
        if (i != 0) b.lit(", ");
        b.slot(SlotKind::Object, in.objects[i]);
      }
      b.lit(".");
      break;
    case TemplateId::MultiPos:
      want_positions(in, 1, 3, id);
      want_objects(in, 1, 1, id);
      b.lit("The ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(" is located in which region? In ");
      for (std::size_t i = 0; i < in.positions.size(); ++i) {
        if (i != 0) {
          b.lit(i + 1 == in.positions.size() ? " and " : ", ");
        }
        b.slot(pos_kind, in.positions[i]);
      }
      b.lit(".");
      break;
    case TemplateId::RegionSynonym:
      want_positions(in, 1, 1, id);
      want_objects(in, 1, 1, id);
      b.lit("The object in region ");
      b.slot(pos_kind, in.positions[0]);
      b.lit(" looks like ");
      b.slot(SlotKind::Object, in.objects[0]);
      b.lit(".");
      break;
    case TemplateId::Mixed:
      throw Error(ErrorKind::Config, "mixed is a drawing policy, not a renderable template");
  }
  return {std::move(b.text), std::move(b.slots)};
}

const std::string& sample_object(const std::vector<std::string>& candidates, RecordRng& rng) {
  if (candidates.empty()) {
    throw Error(ErrorKind::EmptyCandidates, "no candidate tags to sample from");
  }
  if (candidates.size() == 1) {
    return candidates.front();
  }
  return candidates[rng.bounded(candidates.size())];
}

std::vector<RenderedPrompt> build_prompts(const BlockTagMap& tags, const PromptPolicy& policy,
                                          RecordRng& rng) {
  const std::size_t cap =
      policy.max_sentences > 0
          ? policy.max_sentences
          : static_cast<std::size_t>(policy.grid_n) * static_cast<std::size_t>(policy.grid_n);
  std::vector<RenderedPrompt> out;

  const auto draw_template = [&]() {
    return policy.template_id == TemplateId::Mixed
               ? kBaseTemplates[rng.bounded(kBaseTemplates.size())]
               : policy.template_id;
  };

  if (policy.template_id == TemplateId::MultiPos) {
    // This variant groups by object: one sentence per distinct tag, listing
    // up to three of the blocks that contain it, block order ascending.
    std::vector<std::pair<std::string, std::vector<int>>> by_tag;
    for (const auto& [block, entries] : tags.entries) {
      for (const BlockTagEntry& e : entries) {
        auto it = std::find_if(by_tag.begin(), by_tag.end(),
                               [&e](const auto& p) { return p.first == e.tag; });
        if (it == by_tag.end()) {
          by_tag.push_back({e.tag, {block}});
        } else if (it->second.back() != block) {
          it->second.push_back(block);
        }
      }
    }
    for (const auto& [tag, blocks] : by_tag) {
      if (out.size() >= cap) return out;
      RenderInput in;
      const std::size_t take = std::min<std::size_t>(3, blocks.size());
      for (std::size_t i = 0; i < take; ++i) {
        in.positions.push_back(position_phrase(blocks[i], policy.grid_n, PositionStyle::Numeric));
      }
      in.objects.push_back(tag);
      out.push_back(render(TemplateId::MultiPos, in));
    }
    if (policy.emit_x) {
      for (const BlockTagEntry& e : tags.out_of_border) {
        if (out.size() >= cap) return out;
        RenderInput in;
        in.positions.push_back("X");
        in.positions_out_of_border = true;
        in.objects.push_back(e.tag);
        out.push_back(render(TemplateId::MultiPos, in));
      }
    }
    return out;
  }

  for (const auto& [block, entries] : tags.entries) {
    if (out.size() >= cap) return out;
    TemplateId id = draw_template();

    if (id == TemplateId::MultiTag) {
      RenderInput in;
      in.positions.push_back(position_phrase(block, policy.grid_n, PositionStyle::Numeric));
      const std::size_t take = std::min<std::size_t>(3, entries.size());
      for (std::size_t i = 0; i < take; ++i) {
        in.objects.push_back(entries[i].tag);
      }
      out.push_back(render(TemplateId::MultiTag, in));
      continue;
    }

    const std::size_t pick = entries.size() > 1 ? rng.bounded(entries.size()) : 0;
    const BlockTagEntry& chosen = entries[pick];
    // Draws that cannot be realized for this entry fall back to the plain
    // block template so the mixed stream stays uniform.
    if (id == TemplateId::CoordHasO && !chosen.box.has_value()) {
      id = TemplateId::BlockHasO;
    }
    if (id == TemplateId::NounBlockHasO && policy.grid_n != 3) {
      id = TemplateId::BlockHasO;
    }

    RenderInput in;
    in.objects.push_back(chosen.tag);
    if (id == TemplateId::CoordHasO) {
      in.coords = chosen.box;
    } else {
      const PositionStyle style =
          id == TemplateId::NounBlockHasO ? PositionStyle::Noun : PositionStyle::Numeric;
      in.positions.push_back(position_phrase(block, policy.grid_n, style));
    }
    out.push_back(render(id, in));
  }

  if (policy.emit_x) {
    for (const BlockTagEntry& e : tags.out_of_border) {
      if (out.size() >= cap) return out;
      TemplateId id = draw_template();
      if (id == TemplateId::NounBlockHasO && policy.grid_n != 3) {
        id = TemplateId::BlockHasO;
      }
      RenderInput in;
      in.objects.push_back(e.tag);
      if (id == TemplateId::CoordHasO && e.box.has_value()) {
        in.coords = e.box;
      } else {
        if (id == TemplateId::CoordHasO) {
          id = TemplateId::BlockHasO;
        }
        in.positions.push_back("X");
        in.positions_out_of_border = true;
      }
      out.push_back(render(id, in));
    }
  }
  return out;
}

PromptedSample compose(const std::string& caption, const std::vector<RenderedPrompt>& sentences) {
  PromptedSample s;
  s.caption = caption;
  if (sentences.empty()) {
    s.composed = caption;  // partial-annotation fallback: the caption, byte for byte
    return s;
  }
  std::size_t prompt_len = 0;
  for (const RenderedPrompt& r : sentences) {
    prompt_len += r.text.size() + 1;
  }
  s.prompt.reserve(prompt_len);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i != 0) s.prompt.push_back(' ');
    s.prompt += sentences[i].text;
  }
  s.composed.reserve(caption.size() + 1 + s.prompt.size());
  s.composed = caption;
  s.composed.push_back(' ');
  s.composed += s.prompt;

  std::size_t base = caption.size() + 1;
  for (const RenderedPrompt& r : sentences) {
    for (const Slot& slot : r.slots) {
      s.slots.push_back({slot.kind, slot.begin + base, slot.length, slot.text});
    }
    base += r.text.size() + 1;
  }
  return s;
}

std::string_view mask_kind_name(MaskKind kind) {
  return kind == MaskKind::Position ? "P" : "O";
}

std::optional<MaskKind> mask_kind_from_name(std::string_view name) {
  if (name == "P") return MaskKind::Position;
  if (name == "O") return MaskKind::Object;
  return std::nullopt;
}

ClozeRecord make_cloze(const PromptedSample& sample, MaskKind kind,
                       const std::string& mask_token) {
  const SlotKind want = kind == MaskKind::Position ? SlotKind::Position : SlotKind::Object;
  ClozeRecord cloze;
  cloze.mask_kind = kind;
  std::size_t cursor = 0;
  for (const Slot& slot : sample.slots) {
    if (slot.kind != want) continue;
    cloze.masked_text.append(sample.composed, cursor, slot.begin - cursor);
    cloze.targets.push_back({cloze.masked_text.size(), mask_token.size(), slot.text});
    cloze.masked_text += mask_token;
    cursor = slot.begin + slot.length;
  }
  if (cloze.targets.empty()) {
    throw Error(ErrorKind::NoSuchSlot,
                std::string("sample has no slot of kind ") + std::string(mask_kind_name(kind)));
  }
  cloze.masked_text.append(sample.composed, cursor, std::string::npos);
  return cloze;
}

std::string substitute_cloze(const ClozeRecord& cloze) {
  std::string out;
  out.reserve(cloze.masked_text.size());
  std::size_t cursor = 0;
  for (const ClozeTarget& t : cloze.targets) {
    out.append(cloze.masked_text, cursor, t.begin - cursor);
    out += t.text;
    cursor = t.begin + t.length;
  }
  out.append(cloze.masked_text, cursor, std::string::npos);
  return out;
}

std::vector<PretextWord> pretext_sequence(const PromptedSample& sample) {
  std::vector<PretextWord> words;
  const std::string& text = sample.composed;
  const std::size_t prompt_begin =
      sample.prompt.empty() ? text.size() : text.size() - sample.prompt.size();
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    words.push_back({text.substr(begin, i - begin), begin >= prompt_begin});
  }
  return words;
}

std::string serialize_sample(const PromptedSample& sample) {
  std::string out;
  out.reserve(128 + sample.composed.size() * 2);
  out += "{\"id\":";
  jsonutil::append_escaped(out, sample.id);
  out += ",\"caption\":";
  jsonutil::append_escaped(out, sample.caption);
  out += ",\"prompt\":";
  jsonutil::append_escaped(out, sample.prompt);
  out += ",\"composed\":";
  jsonutil::append_escaped(out, sample.composed);
  out += ",\"template\":";
  jsonutil::append_escaped(out, template_name(sample.template_id));
  out += ",\"slots\":[";
  for (std::size_t i = 0; i < sample.slots.size(); ++i) {
    const Slot& s = sample.slots[i];
    if (i != 0) out.push_back(',');
    out += "{\"kind\":";
    jsonutil::append_escaped(out, slot_kind_name(s.kind));
    out += ",\"begin\":";
    jsonutil::append_int(out, s.begin);
    out += ",\"len\":";
    jsonutil::append_int(out, s.length);
    out += ",\"text\":";
    jsonutil::append_escaped(out, s.text);
    out.push_back('}');
  }
  out += "],\"seed_used\":";
  jsonutil::append_int(out, sample.seed_used);
  out.push_back('}');
  return out;
}

PromptedSample parse_sample(std::string_view line, std::uint64_t base_offset) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Schema, "malformed output record", base_offset);
  }
  const auto str = [&](const char* key) -> std::string {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorKind::Schema, std::string("missing or non-string field \"") + key + "\"",
                  base_offset, key);
    }
    return it->get<std::string>();
  };
  PromptedSample s;
  s.id = str("id");
  s.caption = str("caption");
  s.prompt = str("prompt");
  s.composed = str("composed");
  const std::optional<TemplateId> tid = template_from_name(str("template"));
  if (!tid.has_value()) {
    throw Error(ErrorKind::Schema, "unknown template name", base_offset, "template");
  }
  s.template_id = *tid;
  const auto slots = j.find("slots");
  if (slots == j.end() || !slots->is_array()) {
    throw Error(ErrorKind::Schema, "missing slots array", base_offset, "slots");
  }
  for (const auto& js : *slots) {
    if (!js.is_object() || !js.contains("kind") || !js.contains("begin") || !js.contains("len") ||
        !js.contains("text")) {
      throw Error(ErrorKind::Schema, "malformed slot", base_offset, "slots");
    }
    const std::optional<SlotKind> kind = slot_kind_from_name(js["kind"].get<std::string>());
    if (!kind.has_value()) {
      throw Error(ErrorKind::Schema, "unknown slot kind", base_offset, "slots");
    }
    s.slots.push_back({*kind, js["begin"].get<std::size_t>(), js["len"].get<std::size_t>(),
                       js["text"].get<std::string>()});
  }
  const auto seed = j.find("seed_used");
  if (seed == j.end() || !seed->is_number()) {
    throw Error(ErrorKind::Schema, "missing seed_used", base_offset, "seed_used");
  }
  s.seed_used = seed->get<std::uint64_t>();
  return s;
}

std::string serialize_cloze(const std::string& id, const ClozeRecord& cloze) {
  std::string out;
  out.reserve(96 + cloze.masked_text.size() * 2);
  out += "{\"id\":";
  jsonutil::append_escaped(out, id);
  out += ",\"masked_text\":";
  jsonutil::append_escaped(out, cloze.masked_text);
  out += ",\"mask_kind\":";
  jsonutil::append_escaped(out, mask_kind_name(cloze.mask_kind));
  out += ",\"targets\":[";
  for (std::size_t i = 0; i < cloze.targets.size(); ++i) {
    const ClozeTarget& t = cloze.targets[i];
    if (i != 0) out.push_back(',');
    out += "{\"begin\":";
    jsonutil::append_int(out, t.begin);
    out += ",\"len\":";
    jsonutil::append_int(out, t.length);
    out += ",\"text\":";
    jsonutil::append_escaped(out, t.text);
    out.push_back('}');
  }
  out += "]}";
  return out;
}

}  // namespace gridprompt
