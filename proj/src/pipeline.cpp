// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "gridprompt/errors.hpp"
#include "gridprompt/ingest.hpp"
#include "gridprompt/tagging.hpp"
#include "json_util.hpp"

namespace gridprompt {

namespace {

double parse_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Config, "bad number in " + what + ": " + std::string(text));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

constexpr std::string_view kPhotometricNames[] = {
    "color",    "brightness", "contrast",     "sharpness", "posterize",
    "solarize", "equalize",   "autocontrast", "invert",
};

}  // namespace

AugmentationSpec AugmentationSpec::parse(std::string_view text) {
  AugmentationSpec spec;
  for (std::string_view token : split(text, '+')) {
    if (token.empty()) {
      throw Error(ErrorKind::Config, "empty augmentation step");
    }
    const std::size_t colon = token.find(':');
    const std::string_view name = token.substr(0, colon);
    const std::string_view args =
        colon == std::string_view::npos ? std::string_view{} : token.substr(colon + 1);
    AugmentationStep step;
    if (name == "affine") {
      const auto parts = split(args, ',');
      if (parts.size() != 6) {
        throw Error(ErrorKind::Config, "affine step wants 6 coefficients a,b,c,d,tx,ty");
      }
      step.kind = AugmentationStep::Kind::Affine;
      step.affine.a = parse_double(parts[0], "affine");
      step.affine.b = parse_double(parts[1], "affine");
      step.affine.c = parse_double(parts[2], "affine");
      step.affine.d = parse_double(parts[3], "affine");
      step.affine.tx = parse_double(parts[4], "affine");
      step.affine.ty = parse_double(parts[5], "affine");
    } else if (name == "rotate") {
      step.kind = AugmentationStep::Kind::Rotate;
      step.angle = parse_double(args, "rotate");
    } else if (name == "translate") {
      const auto parts = split(args, ',');
      if (parts.size() != 2) {
        throw Error(ErrorKind::Config, "translate step wants dx,dy");
      }
      step.kind = AugmentationStep::Kind::Translate;
      step.dx = parse_double(parts[0], "translate");
      step.dy = parse_double(parts[1], "translate");
    } else if (name == "scale") {
      const auto parts = split(args, ',');
      if (parts.size() != 2) {
        throw Error(ErrorKind::Config, "scale step wants sx,sy");
      }
      step.kind = AugmentationStep::Kind::Scale;
      step.sx = parse_double(parts[0], "scale");
      step.sy = parse_double(parts[1], "scale");
    } else if (name == "hflip") {
      step.kind = AugmentationStep::Kind::HFlip;
    } else if (name == "vflip") {
      step.kind = AugmentationStep::Kind::VFlip;
    } else {
      bool photometric = false;
      for (std::string_view p : kPhotometricNames) {
        if (name == p) {
          photometric = true;
          break;
        }
      }
      if (!photometric) {
        throw Error(ErrorKind::Config, "unknown augmentation step: " + std::string(name));
      }
      step.kind = AugmentationStep::Kind::Photometric;
      step.name = std::string(name);
    }
    spec.steps.push_back(std::move(step));
  }
  return spec;
}

Affine2D AugmentationSpec::resolve(double width, double height) const {
  Affine2D total = Affine2D::identity();
  for (const AugmentationStep& step : steps) {
    Affine2D t = Affine2D::identity();
    switch (step.kind) {
      case AugmentationStep::Kind::Affine:
        t = step.affine;
        break;
      case AugmentationStep::Kind::Rotate:
        t = Affine2D::rotation_deg(step.angle, width / 2.0, height / 2.0);
        break;
      case AugmentationStep::Kind::Translate:
        t = Affine2D::translation(step.dx, step.dy);
        break;
      case AugmentationStep::Kind::Scale:
        t = Affine2D::scaling(step.sx, step.sy);
        break;
      case AugmentationStep::Kind::HFlip:
        t = Affine2D::hflip(width);
        break;
      case AugmentationStep::Kind::VFlip:
        t = Affine2D::vflip(height);
        break;
      case AugmentationStep::Kind::Photometric:
        continue;  // cannot move a box
    }
    total = compose(t, total);
  }
  return total;
}

std::string_view tag_mode_name(TagMode mode) {
  return mode == TagMode::Detector ? "detector" : "embedding";
}

std::optional<TagMode> tag_mode_from_name(std::string_view name) {
  if (name == "detector") return TagMode::Detector;
  if (name == "embedding") return TagMode::Embedding;
  return std::nullopt;
}

void validate_config(const PipelineConfig& config) {
  if (config.grid_n < 1) {
    throw Error(ErrorKind::Config, "grid side must be >= 1");
  }
  if (config.top_k < 1) {
    throw Error(ErrorKind::Config, "top-k must be >= 1");
  }
  if (config.vocab_size < 1) {
    throw Error(ErrorKind::Config, "vocabulary size must be >= 1");
  }
  if (config.template_id == TemplateId::NounBlockHasO && config.grid_n != 3) {
    throw Error(ErrorKind::UnsupportedGrid,
                "noun position template requires a 3x3 grid");
  }
  if (config.template_id == TemplateId::CoordHasO && config.mode == TagMode::Embedding) {
    throw Error(ErrorKind::Config,
                "coordinate template needs detector boxes; embedding mode has none");
  }
  if (config.mode == TagMode::Embedding && config.embeddings_path.empty()) {
    throw Error(ErrorKind::Config, "embedding mode requires --embeddings");
  }
}

int effective_workers(const PipelineConfig& config) {
  if (config.workers > 0) {
    return config.workers;
  }
  if (const char* env = std::getenv("GRIDPROMPT_WORKERS")) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::string_view(env).size(), v);
    if (ec == std::errc{} && ptr == env + std::string_view(env).size() && v > 0) {
      return v;
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void DatasetStats::merge(const DatasetStats& other) {
  images += other.images;
  captions += other.captions;
  records_with_boxes += other.records_with_boxes;
  prompted += other.prompted;
  unprompted += other.unprompted;
  rejected += other.rejected;
  for (const auto& [name, n] : other.per_template) {
    per_template[name] += n;
  }
  if (block_occupancy.size() < other.block_occupancy.size()) {
    block_occupancy.resize(other.block_occupancy.size(), 0);
  }
  for (std::size_t i = 0; i < other.block_occupancy.size(); ++i) {
    block_occupancy[i] += other.block_occupancy[i];
  }
}

std::string DatasetStats::to_json() const {
  std::string out;
  out += "{\"images\":";
  jsonutil::append_int(out, images);
  out += ",\"captions\":";
  jsonutil::append_int(out, captions);
  out += ",\"records_with_boxes\":";
  jsonutil::append_int(out, records_with_boxes);
  out += ",\"prompted\":";
  jsonutil::append_int(out, prompted);
  out += ",\"unprompted\":";
  jsonutil::append_int(out, unprompted);
  out += ",\"rejected\":";
  jsonutil::append_int(out, rejected);
  out += ",\"per_template\":{";
  bool first = true;
  for (const auto& [name, n] : per_template) {
    if (!first) out.push_back(',');
    first = false;
    jsonutil::append_escaped(out, name);
    out.push_back(':');
    jsonutil::append_int(out, n);
  }
  out += "},\"block_occupancy\":[";
  for (std::size_t i = 0; i < block_occupancy.size(); ++i) {
    if (i != 0) out.push_back(',');
    jsonutil::append_int(out, block_occupancy[i]);
  }
  out += "]}";
  return out;
}

namespace {

BlockTagMap make_tags(const ImageRecord& rec, const PipelineConfig& config,
                      const EmbeddingMatrix* table) {
  if (config.mode == TagMode::Detector) {
    const std::vector<DetectedObject> top = select_top_k(rec.detections, config.top_k);
    std::optional<Affine2D> transform;
    if (config.augmentation.has_value()) {
      transform = config.augmentation->resolve(rec.width, rec.height);
    }
    const BlockGrid grid(config.grid_n, rec.width, rec.height);
    return assign_to_blocks(grid, top, transform);
  }
  if (table == nullptr) {
    throw Error(ErrorKind::MissingEmbeddings, "embedding mode requires a loaded table");
  }
  return tag_blocks_by_embedding(rec, *table, config.grid_n);
}

std::vector<PromptedSample> samples_from_tags(const ImageRecord& rec, const BlockTagMap& tags,
                                              const PipelineConfig& config) {
  const bool can_prompt =
      !tags.entries.empty() || (config.emit_x && !tags.out_of_border.empty());
  if (!can_prompt && !config.partial_ok) {
    throw Error(ErrorKind::NoAnnotations, "record " + rec.id + " has nothing to tag");
  }
  const PromptPolicy policy{config.template_id, config.grid_n, config.max_sentences,
                            config.emit_x};
  std::vector<PromptedSample> samples;
  samples.reserve(rec.captions.size());
  for (std::size_t ci = 0; ci < rec.captions.size(); ++ci) {
    RecordRng rng = RecordRng::for_record(config.global_seed, rec.id, ci);
    const std::uint64_t seed = rng.stream_seed();
    const std::vector<RenderedPrompt> sentences = build_prompts(tags, policy, rng);
    PromptedSample sample = compose(rec.captions[ci], sentences);
    sample.id = rec.id;
    sample.template_id = config.template_id;
    sample.seed_used = seed;
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace

std::vector<PromptedSample> process_record_samples(const ImageRecord& rec,
                                                   const PipelineConfig& config,
                                                   const EmbeddingMatrix* table) {
  return samples_from_tags(rec, make_tags(rec, config, table), config);
}

PromptedSample process_record(const ImageRecord& rec, const PipelineConfig& config,
                              const EmbeddingMatrix* table) {
  return std::move(process_record_samples(rec, config, table).front());
}

namespace {

struct PendingLine {
  std::string text;
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;
};

struct StatDelta {
  std::uint64_t captions = 0;
  bool with_boxes = false;
  bool prompted = false;
  std::vector<int> assigned_blocks;  // one entry per in-canvas object
};

struct LineResult {
  std::string output;  // newline-terminated sample lines
  std::string reject;  // one newline-terminated reject line, or empty
  StatDelta delta;
};

std::string make_reject(const PendingLine& line, std::string_view kind, std::string_view field,
                        std::string_view message, std::uint64_t offset) {
  std::string out;
  out += "{\"line\":";
  jsonutil::append_int(out, line.line_no);
  out += ",\"offset\":";
  jsonutil::append_int(out, offset);
  out += ",\"error\":";
  jsonutil::append_escaped(out, kind);
  out += ",\"field\":";
  jsonutil::append_escaped(out, field);
  out += ",\"message\":";
  jsonutil::append_escaped(out, message);
  out += ",\"raw\":";
  jsonutil::append_escaped(out, line.text);
  out += "}\n";
  return out;
}

LineResult process_line(const PendingLine& line, const PipelineConfig& config,
                        const EmbeddingMatrix* table, const ValidationContext& vctx) {
  LineResult result;
  try {
    const ImageRecord rec = parse_record(line.text, line.offset);
    const ValidationReport report = validate_record(rec, vctx);
    if (!report.admissible()) {
      std::string message;
      for (const Violation& v : report.violations) {
        if (!message.empty()) message += "; ";
        message += v.rule;
        if (!v.field_path.empty()) {
          message += " at " + v.field_path;
        }
        message += ": " + v.message;
      }
      result.reject = make_reject(line, "validation", report.violations.front().field_path,
                                  message, line.offset);
      return result;
    }
    const BlockTagMap tags = make_tags(rec, config, table);
    const std::vector<PromptedSample> samples = samples_from_tags(rec, tags, config);
    for (const PromptedSample& s : samples) {
      result.output += serialize_sample(s);
      result.output.push_back('\n');
    }
    result.delta.captions = samples.size();
    result.delta.with_boxes = !rec.detections.empty();
    result.delta.prompted = !samples.front().prompt.empty();
    for (const auto& [block, entries] : tags.entries) {
      for (std::size_t i = 0; i < entries.size(); ++i) {
        result.delta.assigned_blocks.push_back(block);
      }
    }
  } catch (const Error& e) {
    result.output.clear();
    result.reject = make_reject(line, error_kind_name(e.kind()), e.field_path(), e.what(),
                                e.byte_offset());
  } catch (const std::exception& e) {
    result.output.clear();
    result.reject = make_reject(line, "internal", "", e.what(), line.offset);
  }
  return result;
}

constexpr std::size_t kBatchLines = 8192;

}  // namespace

DatasetStats run(const PipelineConfig& config) {
  validate_config(config);
  if (config.input_path.empty() || config.output_path.empty()) {
    throw Error(ErrorKind::Config, "input and output paths are required");
  }

  std::ifstream in(config.input_path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open input corpus: " + config.input_path);
  }
  std::ofstream out(config.output_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot create output corpus: " + config.output_path);
  }
  const std::string rejects_path =
      config.rejects_path.empty() ? config.output_path + ".rejects" : config.rejects_path;
  std::ofstream rejects(rejects_path, std::ios::binary | std::ios::trunc);
  if (!rejects) {
    throw Error(ErrorKind::Io, "cannot create rejects file: " + rejects_path);
  }

  EmbeddingMatrix table;
  const EmbeddingMatrix* table_ptr = nullptr;
  if (config.mode == TagMode::Embedding) {
    table = load_embedding_table(config.embeddings_path);
    table_ptr = &table;
  }

  ValidationContext vctx;
  vctx.grid_n = config.grid_n;
  if (table_ptr != nullptr) {
    vctx.embedding_dim = table.dim;
  }

  const int workers = effective_workers(config);

  DatasetStats stats;
  stats.block_occupancy.assign(
      static_cast<std::size_t>(config.grid_n) * static_cast<std::size_t>(config.grid_n), 0);

  std::vector<PendingLine> batch;
  batch.reserve(kBatchLines);
  std::vector<LineResult> results;
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;
  std::string line;
  bool eof = false;

  while (!eof) {
    batch.clear();
    while (batch.size() < kBatchLines) {
      if (!std::getline(in, line)) {
        eof = true;
        break;
      }
      ++line_no;
      const std::uint64_t line_offset = offset;
      offset += line.size() + 1;
      if (line.empty()) {
        continue;  // blank separator lines carry no record
      }
      batch.push_back(PendingLine{std::move(line), line_offset, line_no});
      line.clear();
    }
    if (batch.empty()) {
      continue;
    }

    results.assign(batch.size(), LineResult{});
    std::atomic<std::size_t> next{0};
    const auto work = [&]() {
      for (std::size_t i; (i = next.fetch_add(1, std::memory_order_relaxed)) < batch.size();) {
        results[i] = process_line(batch[i], config, table_ptr, vctx);
      }
    };
    const int spawn = std::min<int>(workers, static_cast<int>(batch.size())) - 1;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(std::max(spawn, 0)));
    for (int t = 0; t < spawn; ++t) {
      threads.emplace_back(work);
    }
    work();
    for (std::thread& t : threads) {
      t.join();
    }

    // Single writer restores input order exactly.
    for (const LineResult& r : results) {
      if (!r.reject.empty()) {
        rejects << r.reject;
        ++stats.rejected;
        continue;
      }
      out << r.output;
      ++stats.images;
      stats.captions += r.delta.captions;
      stats.records_with_boxes += r.delta.with_boxes ? 1 : 0;
      if (r.delta.prompted) {
        ++stats.prompted;
      } else {
        ++stats.unprompted;
      }
      stats.per_template[std::string(template_name(config.template_id))] += r.delta.captions;
      for (int b : r.delta.assigned_blocks) {
        ++stats.block_occupancy[static_cast<std::size_t>(b)];
      }
    }
  }

  out.flush();
  rejects.flush();
  if (!out || !rejects) {
    throw Error(ErrorKind::Io, "write failure while emitting corpus");
  }
  return stats;
}

namespace {

std::optional<int> position_text_to_block(const std::string& text) {
  if (text.empty()) return std::nullopt;
  bool digits = true;
  for (char c : text) {
    if (c < '0' || c > '9') {
      digits = false;
      break;
    }
  }
  if (digits) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
    return std::nullopt;
  }
  static constexpr std::string_view nouns[9] = {
      "upper left",  "upper middle", "upper right",  "middle left",   "center",
      "middle right", "bottom left", "bottom middle", "bottom right",
  };
  for (int i = 0; i < 9; ++i) {
    if (text == nouns[i]) return i;
  }
  return std::nullopt;
}

}  // namespace

DatasetStats compute_stats(std::istream& corpus, int grid_n) {
  DatasetStats stats;
  stats.block_occupancy.assign(
      static_cast<std::size_t>(grid_n) * static_cast<std::size_t>(grid_n), 0);

  std::string line;
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;

  std::string group_id;
  bool in_group = false;
  bool group_prompted = false;
  bool group_has_positions = false;

  const auto flush_group = [&]() {
    if (!in_group) return;
    ++stats.images;
    if (group_prompted) {
      ++stats.prompted;
    } else {
      ++stats.unprompted;
    }
    if (group_has_positions) {
      ++stats.records_with_boxes;
    }
    in_group = false;
  };

  while (std::getline(corpus, line)) {
    ++line_no;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorKind::Schema, "malformed line " + std::to_string(line_no), line_offset);
    }
    if (j.contains("composed")) {
      const PromptedSample sample = parse_sample(line, line_offset);
      if (!in_group || sample.id != group_id) {
        flush_group();
        in_group = true;
        group_id = sample.id;
        group_prompted = false;
        group_has_positions = false;
      }
      ++stats.captions;
      ++stats.per_template[std::string(template_name(sample.template_id))];
      if (!sample.prompt.empty()) {
        group_prompted = true;
      }
      for (const Slot& slot : sample.slots) {
        if (slot.kind == SlotKind::Object) {
          continue;
        }
        group_has_positions = true;
        if (slot.kind == SlotKind::Position) {
          if (const std::optional<int> block = position_text_to_block(slot.text)) {
            if (*block >= 0) {
              const std::size_t b = static_cast<std::size_t>(*block);
              if (b >= stats.block_occupancy.size()) {
                stats.block_occupancy.resize(b + 1, 0);
              }
              ++stats.block_occupancy[b];
            }
          }
        }
      }
    } else if (j.contains("width")) {
      flush_group();
      const ImageRecord rec = parse_record(line, line_offset);
      ++stats.images;
      stats.captions += rec.captions.size();
      ++stats.unprompted;  // a manifest carries no prompts yet
      if (!rec.detections.empty()) {
        ++stats.records_with_boxes;
      }
      const BlockGrid grid(grid_n, rec.width, rec.height);
      for (const DetectedObject& det : rec.detections) {
        const auto [cx, cy] = center(det.box);
        if (const std::optional<int> block = grid.block_of_point(cx, cy)) {
          ++stats.block_occupancy[static_cast<std::size_t>(*block)];
        }
      }
    } else {
      throw Error(ErrorKind::Schema,
                  "line " + std::to_string(line_no) + " is neither an input nor an output record",
                  line_offset);
    }
  }
  flush_group();
  return stats;
}

}  // namespace gridprompt
