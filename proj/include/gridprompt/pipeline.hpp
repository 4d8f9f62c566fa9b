// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridprompt/embedding.hpp"
#include "gridprompt/geometry.hpp"
#include "gridprompt/prompt.hpp"
#include "gridprompt/record.hpp"

namespace gridprompt {

/// One geometric (or accepted-but-ignored photometric) augmentation step.
/// Named steps that depend on the canvas resolve against the record's
/// dimensions; boxes are co-transformed exactly like the image would be.
struct AugmentationStep {
  enum class Kind { Affine, Rotate, Translate, Scale, HFlip, VFlip, Photometric };
  Kind kind = Kind::Photometric;
  Affine2D affine;       // Affine
  double angle = 0.0;    // Rotate, degrees
  double dx = 0.0;       // Translate
  double dy = 0.0;
  double sx = 1.0;       // Scale
  double sy = 1.0;
  std::string name;      // Photometric
};

struct AugmentationSpec {
  std::vector<AugmentationStep> steps;

  /// Parses "rotate:15+hflip+translate:4,-2" style specs. Steps apply in
  /// listed order. Photometric names (color, brightness, contrast, ...) are
  /// accepted and ignored: they cannot move a box.
  static AugmentationSpec parse(std::string_view text);

  /// Folds the geometric steps into one transform for a canvas of the given
  /// size. The grid is always built on this same canvas.
  Affine2D resolve(double width, double height) const;
};

enum class TagMode { Detector, Embedding };

std::string_view tag_mode_name(TagMode mode);
std::optional<TagMode> tag_mode_from_name(std::string_view name);

inline constexpr int kDefaultGridN = 3;
inline constexpr int kDefaultTopK = 10;
inline constexpr std::size_t kDefaultVocabSize = 3000;

struct PipelineConfig {
  int grid_n = kDefaultGridN;
  int top_k = kDefaultTopK;
  TagMode mode = TagMode::Detector;
  TemplateId template_id = TemplateId::BlockHasO;
  std::size_t vocab_size = kDefaultVocabSize;
  std::uint64_t global_seed = 0;
  bool partial_ok = true;
  bool emit_x = true;
  std::optional<AugmentationSpec> augmentation;
  int workers = 0;                // 0: GRIDPROMPT_WORKERS env, then hardware
  std::size_t max_sentences = 0;  // 0: grid_n^2
  std::string input_path;
  std::string output_path;
  std::string rejects_path;
  std::string embeddings_path;
};

/// Throws Error(Config) on inconsistent settings (noun template off a 3x3
/// grid, coordinate template in embedding mode, missing table path, ...).
void validate_config(const PipelineConfig& config);

int effective_workers(const PipelineConfig& config);

struct DatasetStats {
  std::uint64_t images = 0;             // records processed
  std::uint64_t captions = 0;           // samples (one per caption)
  std::uint64_t records_with_boxes = 0;
  std::uint64_t prompted = 0;
  std::uint64_t unprompted = 0;
  std::uint64_t rejected = 0;
  std::map<std::string, std::uint64_t> per_template;  // samples per template id
  std::vector<std::uint64_t> block_occupancy;         // objects assigned per block

  void merge(const DatasetStats& other);
  std::string to_json() const;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Tags, prompts, and composes every caption of one admissible record.
/// Caption k draws from its own stream derived from (global_seed, id, k).
std::vector<PromptedSample> process_record_samples(const ImageRecord& rec,
                                                   const PipelineConfig& config,
                                                   const EmbeddingMatrix* table);

/// First-caption convenience form of the above.
PromptedSample process_record(const ImageRecord& rec, const PipelineConfig& config,
                              const EmbeddingMatrix* table);

/// Streams the input corpus through parse -> validate -> tag -> prompt ->
/// compose with deterministic parallelism: output line order equals input
/// order and output bytes depend only on (input bytes, config, seed). Failed
/// records go to the rejects file with their classified error, never dropped.
DatasetStats run(const PipelineConfig& config);

/// Exact counts over a corpus: accepts both generated output corpora and
/// input manifests (the latter count as unprompted images with raw-detection
/// occupancy).
DatasetStats compute_stats(std::istream& corpus, int grid_n = kDefaultGridN);

}  // namespace gridprompt
